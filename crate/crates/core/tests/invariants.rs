mod common;

use polyrelax::certify::{grid_oracle, verify_certificate};
use polyrelax::lagrange::{eval_g, EvalMethod};
use polyrelax::polycore::mono_index_set;
use polyrelax::problem::lift_products;
use polyrelax::relax::build_sos_bound;
use polyrelax::{evaluate, normalize, parse_problem, serialize_problem, solve, Hierarchy, Polynomial, ProblemInstance, SolveStatus, SolverConfig, VarKind};
use proptest::prelude::*;

use common::*;

fn poly_strategy(n: usize, deg: u32) -> impl Strategy<Value = Polynomial> {
    let monos = mono_index_set(n, deg);
    prop::collection::vec(prop::option::weighted(0.7, -8i32..=8), monos.len()).prop_map(move |cs| {
        let mut p = Polynomial::zero(n);
        for (m, c) in monos.iter().zip(cs) {
            if let Some(c) = c {
                p.add_term(m.clone(), c as f64 / 4.0);
            }
        }
        p
    })
}

fn point(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.5f64..1.5, n)
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
}

/// Univariate instance on `[0,1]` with one constraint satisfied at 0.5.
fn univariate(f: Polynomial, g: Polynomial) -> ProblemInstance {
    let g = g.add(&Polynomial::constant(1, 0.25 - g.eval(&[0.5])));
    let raw = ProblemInstance::with_default_names(f, vec![g], vec![VarKind::Box { lo: 0.0, hi: 1.0 }]).unwrap();
    normalize(&raw).unwrap()
}

fn feasible_samples(inst: &ProblemInstance) -> Vec<Vec<f64>> {
    (0..=40)
        .map(|i| vec![i as f64 / 40.0])
        .filter(|x| inst.is_feasible(x, 0.0))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn arithmetic_agrees_with_evaluation(p in poly_strategy(2, 3), q in poly_strategy(2, 3), x in point(2)) {
        prop_assert!(close(p.add(&q).eval(&x), p.eval(&x) + q.eval(&x)));
        prop_assert!(close(p.sub(&q).eval(&x), p.eval(&x) - q.eval(&x)));
        prop_assert!(close(p.mul(&q).eval(&x), p.eval(&x) * q.eval(&x)));
        prop_assert!(close(p.pow(2).eval(&x), p.eval(&x).powi(2)));
        prop_assert!(close(p.scale(-0.5).eval(&x), -0.5 * p.eval(&x)));
    }

    #[test]
    fn product_degree_adds(p in poly_strategy(3, 2), q in poly_strategy(3, 2)) {
        prop_assume!(!p.is_zero() && !q.is_zero());
        prop_assert_eq!(p.mul(&q).degree(), p.degree() + q.degree());
    }

    #[test]
    fn derivative_matches_difference_quotient(p in poly_strategy(2, 4), x in point(2)) {
        let h = 1e-6;
        for i in 0..2 {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += h;
            xm[i] -= h;
            let fd = (p.eval(&xp) - p.eval(&xm)) / (2.0 * h);
            prop_assert!((p.derivative(i).eval(&x) - fd).abs() <= 1e-5 * (1.0 + fd.abs()));
        }
    }

    #[test]
    fn affine_substitution_is_composition(p in poly_strategy(2, 3), x in point(2), s in 0.1f64..3.0) {
        let shift = [0.5, -1.0];
        let scale = [s, 1.0 / s];
        let sub = p.substitute_affine(&shift, &scale);
        let y: Vec<f64> = (0..2).map(|i| shift[i] + scale[i] * x[i]).collect();
        prop_assert!(close(sub.eval(&x), p.eval(&y)));
    }

    #[test]
    fn lift_products_are_nonnegative_on_k(seed in 0u64..1000, u in prop::collection::vec(0.0f64..1.0, 3)) {
        let inst = random_instance(seed);
        let x = &u[..inst.nvars()];
        prop_assume!(inst.is_feasible(x, 0.0));
        let lift = lift_products(&inst, 2).unwrap();
        for pair in &lift.pairs {
            prop_assert!(pair.poly.eval(x) >= -1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn bounds_are_monotone_sound_and_certified(seed in 0u64..10_000) {
        let inst = random_instance(seed);
        let f_star = grid_oracle(&inst).unwrap().value;
        let config = SolverConfig::default();
        let mut prev = f64::NEG_INFINITY;
        for d in 1..=3 {
            let ev = evaluate(&inst, Hierarchy::Lp, d, 0, &config).unwrap();
            let b = match ev.row.status {
                SolveStatus::Optimal => ev.row.bound.unwrap(),
                SolveStatus::Infeasible => f64::NEG_INFINITY,
                _ => continue,
            };
            prop_assert!(b >= prev - 1e-6, "theta_{} = {} below {}", d, b, prev);
            prop_assert!(b <= f_star + 1e-6);
            if let Some(cert) = &ev.certificate {
                prop_assert!(verify_certificate(&inst, cert, cert.d, cert.k).unwrap() <= 1e-6);
            }
            prev = b;
        }
        for d in 1..=2 {
            let lp = evaluate(&inst, Hierarchy::Lp, d, 0, &config).unwrap();
            let sos = evaluate(&inst, Hierarchy::Bsos, d, 1, &config).unwrap();
            if let (Some(a), Some(b)) = (lp.row.bound, sos.row.bound) {
                if lp.row.status == SolveStatus::Optimal && sos.row.status == SolveStatus::Optimal {
                    prop_assert!(b >= a - 1e-6);
                    prop_assert!(b <= f_star + 1e-6);
                }
            }
        }
    }

    #[test]
    fn serialization_round_trips(seed in 0u64..10_000) {
        let inst = random_instance(seed);
        let back = parse_problem(&serialize_problem(&inst)).unwrap();
        prop_assert!(back.objective.approx_eq(&inst.objective, 1e-12));
        prop_assert_eq!(back.constraints.len(), inst.constraints.len());
        for (a, b) in back.constraints.iter().zip(&inst.constraints) {
            prop_assert!(a.approx_eq(b, 1e-12));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn certified_dual_is_sound(
        f in poly_strategy(1, 4),
        g in poly_strategy(1, 2),
        lam in prop::collection::vec(0.0f64..2.0, 6),
    ) {
        let inst = univariate(f, g);
        let n_pairs = lift_products(&inst, 2).unwrap().len();
        let lam: Vec<f64> = (0..n_pairs).map(|i| lam[i % lam.len()]).collect();
        let gv = eval_g(&inst, 2, &lam, EvalMethod::Auto).unwrap();
        prop_assert!(gv.is_certified());
        for x in feasible_samples(&inst) {
            prop_assert!(gv.value <= inst.objective.eval(&x) + 1e-8);
        }
    }

    #[test]
    fn univariate_dual_is_concave(
        f in poly_strategy(1, 4),
        g in poly_strategy(1, 2),
        a in prop::collection::vec(0.0f64..2.0, 6),
        b in prop::collection::vec(0.0f64..2.0, 6),
    ) {
        let inst = univariate(f, g);
        let n_pairs = lift_products(&inst, 2).unwrap().len();
        let la: Vec<f64> = (0..n_pairs).map(|i| a[i % a.len()]).collect();
        let lb: Vec<f64> = (0..n_pairs).map(|i| b[i % b.len()]).collect();
        let mid: Vec<f64> = la.iter().zip(&lb).map(|(x, y)| 0.5 * (x + y)).collect();
        let ga = eval_g(&inst, 2, &la, EvalMethod::Auto).unwrap().value;
        let gb = eval_g(&inst, 2, &lb, EvalMethod::Auto).unwrap().value;
        let gm = eval_g(&inst, 2, &mid, EvalMethod::Auto).unwrap().value;
        if ga.is_finite() && gb.is_finite() {
            prop_assert!(gm >= 0.5 * (ga + gb) - 1e-8 * (1.0 + ga.abs() + gb.abs()));
        }
    }

    #[test]
    fn sos_bound_never_exceeds_dual(
        f in poly_strategy(1, 4),
        g in poly_strategy(1, 2),
        lam in prop::collection::vec(0.0f64..2.0, 6),
    ) {
        let inst = univariate(f, g);
        let n_pairs = lift_products(&inst, 2).unwrap().len();
        let lam: Vec<f64> = (0..n_pairs).map(|i| lam[i % lam.len()]).collect();
        let gv = eval_g(&inst, 2, &lam, EvalMethod::Auto).unwrap();
        prop_assume!(gv.value.is_finite());
        let l = polyrelax::lagrange::assemble_lagrangian(&inst, 2, &lam).unwrap();
        let k = (l.degree() + 1) / 2;
        let result = solve(&build_sos_bound(&l, k.max(1)), &SolverConfig::with_tolerance(1e-10));
        // the SOS identity holds to the solve residual, which scales with |G|
        if result.status == SolveStatus::Optimal {
            prop_assert!(result.objective <= gv.value + 1e-7 * (1.0 + gv.value.abs()), "sos {} above G {}", result.objective, gv.value);
        }
    }
}
