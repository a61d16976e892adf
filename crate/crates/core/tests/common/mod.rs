#![allow(dead_code)]

use polyrelax::{normalize, parse_problem, Polynomial, ProblemInstance, VarKind};
use polyrelax::polycore::mono_index_set;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const SQUARE: &str = "vars: x\nminimize: 4*x^2 - 4*x + 1\nst: x >= 0\nbox: 0 1\n";
pub const CONVEX_QP: &str = "vars: x1 x2\nminimize: x1^2 + x2^2\nst: x1 + x2 - 0.5 >= 0\nbox: 0 1\n";
pub const LINEAR: &str = "vars: x\nminimize: x\nst: x >= 0\nbox: 0 1\n";
pub const MAXCUT_K3: &str = "vars: x1 x2 x3\n\
minimize: -(x1 + x2 - 2*x1*x2) - (x1 + x3 - 2*x1*x3) - (x2 + x3 - 2*x2*x3)\n\
binary: x1 x2 x3\n";

pub fn load(text: &str) -> ProblemInstance {
    normalize(&parse_problem(text).unwrap()).unwrap()
}

fn random_poly<R: Rng>(rng: &mut R, n: usize, deg: u32) -> Polynomial {
    let mut p = Polynomial::zero(n);
    for m in mono_index_set(n, deg) {
        if rng.gen_bool(0.7) {
            p.add_term(m, (rng.gen_range(-10..=10) as f64) / 4.0);
        }
    }
    p
}

/// One instance of the seeded suite: `n ≤ 3`, degree ≤ 2, `m ≤ 3` constraints,
/// all strictly satisfied at a random point of the box, box `[0,1]ⁿ` or a
/// shifted box.
pub fn random_instance(seed: u64) -> ProblemInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=3);
    let m = rng.gen_range(1..=3);
    let anchor: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..0.9)).collect();
    let f = random_poly(&mut rng, n, 2);
    let constraints = (0..m)
        .map(|_| {
            let deg = rng.gen_range(1..=2);
            let g = random_poly(&mut rng, n, deg);
            let slack = rng.gen_range(0.05..0.5);
            g.add(&Polynomial::constant(n, slack - g.eval(&anchor)))
        })
        .collect();
    let kinds = (0..n)
        .map(|_| if rng.gen_bool(0.25) { VarKind::Box { lo: -1.0, hi: 1.0 } } else { VarKind::Box { lo: 0.0, hi: 1.0 } })
        .collect();
    // anchor is in [0,1]; on a [-1,1] box it stays inside
    let raw = ProblemInstance::with_default_names(f, constraints, kinds).unwrap();
    normalize(&raw).unwrap()
}

pub const SUITE_SIZE: u64 = 20;
pub const SUITE_SEED: u64 = 0x00C0_FFEE;

pub fn suite() -> Vec<ProblemInstance> {
    (0..SUITE_SIZE).map(|i| random_instance(SUITE_SEED + i)).collect()
}
