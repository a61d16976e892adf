//! Problem model: objective, constraints `g_j(x) ≥ 0`, variable domains,
//! normalization onto `[0,1]ⁿ` and the lifted product constraints.

mod parse;

pub use parse::{parse_problem, serialize_problem};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polycore::{binomial, constraint_product, mono_index_set, Polynomial};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum VarKind {
    Box { lo: f64, hi: f64 },
    Binary,
    /// No bounds given; rejected by [`normalize`].
    Free,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProblemInstance {
    pub var_names: Vec<String>,
    pub objective: Polynomial,
    /// Each entry means `g_j(x) ≥ 0`.
    pub constraints: Vec<Polynomial>,
    pub kinds: Vec<VarKind>,
    pub normalized: bool,
    pub objective_offset: f64,
    pub objective_scale: f64,
    /// Interval enclosure of each normalized `g_j` over `[0,1]ⁿ`.
    pub enclosures: Vec<(f64, f64)>,
    /// Original coordinates are `shift + scale·u` for normalized `u`.
    pub var_shift: Vec<f64>,
    pub var_scale: Vec<f64>,
}

impl ProblemInstance {
    pub fn new(
        var_names: Vec<String>,
        objective: Polynomial,
        constraints: Vec<Polynomial>,
        kinds: Vec<VarKind>,
    ) -> Result<Self> {
        let n = var_names.len();
        if n == 0 {
            return Err(Error::InvalidInstance("no variables".into()));
        }
        if kinds.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} variable kinds for {} variables",
                kinds.len(),
                n
            )));
        }
        if objective.nvars() != n || constraints.iter().any(|g| g.nvars() != n) {
            return Err(Error::DimensionMismatch(
                "polynomial variable count differs from the declared variables".into(),
            ));
        }
        Ok(ProblemInstance {
            var_names,
            objective,
            constraints,
            kinds,
            normalized: false,
            objective_offset: 0.0,
            objective_scale: 1.0,
            enclosures: Vec::new(),
            var_shift: vec![0.0; n],
            var_scale: vec![1.0; n],
        })
    }

    /// Convenience constructor naming the variables `x1..xn`.
    pub fn with_default_names(
        objective: Polynomial,
        constraints: Vec<Polynomial>,
        kinds: Vec<VarKind>,
    ) -> Result<Self> {
        let names = (1..=objective.nvars()).map(|i| format!("x{i}")).collect();
        Self::new(names, objective, constraints, kinds)
    }

    pub fn nvars(&self) -> usize {
        self.var_names.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_all_binary(&self) -> bool {
        self.kinds.iter().all(|k| matches!(k, VarKind::Binary))
    }

    pub fn binary_vars(&self) -> Vec<usize> {
        (0..self.nvars())
            .filter(|&i| matches!(self.kinds[i], VarKind::Binary))
            .collect()
    }

    pub fn max_constraint_degree(&self) -> u32 {
        self.constraints.iter().map(Polynomial::degree).max().unwrap_or(0)
    }

    /// Maps a bound on the normalized objective back to original units.
    pub fn to_original_units(&self, value: f64) -> f64 {
        self.objective_scale * value + self.objective_offset
    }

    /// Maps a normalized point back to the original coordinates.
    pub fn to_original_point(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(self.var_shift.iter().zip(&self.var_scale))
            .map(|(ui, (s, c))| s + c * ui)
            .collect()
    }

    /// Membership in `K` (and `{0,1}` for binary variables) up to `tol`.
    pub fn is_feasible(&self, x: &[f64], tol: f64) -> bool {
        for (i, kind) in self.kinds.iter().enumerate() {
            match *kind {
                VarKind::Binary => {
                    if x[i].abs() > tol && (x[i] - 1.0).abs() > tol {
                        return false;
                    }
                }
                VarKind::Box { lo, hi } => {
                    let (lo, hi) = if self.normalized { (0.0, 1.0) } else { (lo, hi) };
                    if x[i] < lo - tol || x[i] > hi + tol {
                        return false;
                    }
                }
                VarKind::Free => {}
            }
        }
        self.constraints.iter().all(|g| g.eval(x) >= -tol)
    }

    /// If `g` equals `x_i` (returns `(i, false)`) or `1 − x_i` (returns
    /// `(i, true)`), identifies the box face it describes.
    pub fn box_face(g: &Polynomial) -> Option<(usize, bool)> {
        let n = g.nvars();
        (0..n).find_map(|i| {
            let xi = Polynomial::var(n, i);
            if g.approx_eq(&xi, 1e-12) {
                Some((i, false))
            } else if g.approx_eq(&Polynomial::one(n).sub(&xi), 1e-12) {
                Some((i, true))
            } else {
                None
            }
        })
    }
}

/// Interval enclosure of `p` over `[0,1]ⁿ`, monomial by monomial.
pub fn unit_box_enclosure(p: &Polynomial) -> (f64, f64) {
    let mut lo = 0.0;
    let mut hi = 0.0;
    for (m, c) in p.terms() {
        if m.is_constant() {
            lo += c;
            hi += c;
        } else if c > 0.0 {
            hi += c;
        } else {
            lo += c;
        }
    }
    (lo, hi)
}

/// Rescales the instance onto `[0,1]ⁿ` with every `g_j ≤ 1` on the box and
/// both box faces `x_i ≥ 0`, `1 − x_i ≥ 0` present for every variable.
///
/// Already-normalized instances are returned unchanged.
pub fn normalize(instance: &ProblemInstance) -> Result<ProblemInstance> {
    if instance.normalized {
        return Ok(instance.clone());
    }
    let n = instance.nvars();
    let mut shift = vec![0.0; n];
    let mut scale = vec![1.0; n];
    for (i, kind) in instance.kinds.iter().enumerate() {
        match *kind {
            VarKind::Box { lo, hi } => {
                if !lo.is_finite() || !hi.is_finite() {
                    return Err(Error::UnboundedVariable(instance.var_names[i].clone()));
                }
                if hi <= lo {
                    return Err(Error::InvalidInstance(format!(
                        "empty or degenerate box [{lo}, {hi}] for {}",
                        instance.var_names[i]
                    )));
                }
                shift[i] = lo;
                scale[i] = hi - lo;
            }
            VarKind::Binary => {}
            VarKind::Free => {
                return Err(Error::UnboundedVariable(instance.var_names[i].clone()));
            }
        }
    }

    let objective = instance.objective.substitute_affine(&shift, &scale);
    let mut constraints = Vec::with_capacity(instance.constraints.len() + 2 * n);
    let mut enclosures = Vec::with_capacity(constraints.capacity());
    for (j, g) in instance.constraints.iter().enumerate() {
        let g = g.substitute_affine(&shift, &scale);
        let (lo, hi) = unit_box_enclosure(&g);
        if hi <= 0.0 {
            return Err(Error::VacuousConstraint {
                index: j,
                upper: hi,
            });
        }
        constraints.push(g.scale(1.0 / hi));
        enclosures.push((lo / hi, 1.0));
    }
    for i in 0..n {
        let xi = Polynomial::var(n, i);
        let faces = [xi.clone(), Polynomial::one(n).sub(&xi)];
        for face in faces {
            if !constraints.iter().any(|g| g.approx_eq(&face, 1e-12)) {
                constraints.push(face);
                enclosures.push((0.0, 1.0));
            }
        }
    }

    let kinds = instance
        .kinds
        .iter()
        .map(|k| match k {
            VarKind::Binary => VarKind::Binary,
            _ => VarKind::Box { lo: 0.0, hi: 1.0 },
        })
        .collect();

    Ok(ProblemInstance {
        var_names: instance.var_names.clone(),
        objective,
        constraints,
        kinds,
        normalized: true,
        objective_offset: instance.objective_offset,
        objective_scale: instance.objective_scale,
        enclosures,
        var_shift: shift,
        var_scale: scale,
    })
}

/// One multiplier index `(α, β) ∈ ℕ^{2m}` with its expanded product.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductPair {
    pub alpha: Vec<u32>,
    pub beta: Vec<u32>,
    pub poly: Polynomial,
}

impl ProductPair {
    pub fn order(&self) -> u32 {
        self.alpha.iter().chain(&self.beta).sum()
    }
}

/// Products `Π g_j^{α_j} (1 − g_j)^{β_j}` with `1 ≤ |α|+|β| ≤ d`.
#[derive(Clone, Debug)]
pub struct ProductConstraintSet {
    pub d: u32,
    pub m: usize,
    pub pairs: Vec<ProductPair>,
    /// The empty product, kept out of `pairs`.
    pub unit: Polynomial,
}

impl ProductConstraintSet {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn max_degree(&self) -> u32 {
        self.pairs.iter().map(|p| p.poly.degree()).max().unwrap_or(0)
    }
}

/// Number of products generated at level `d` from `m` constraints.
pub fn lifted_pair_count(m: usize, d: u32) -> usize {
    binomial(2 * m + d as usize, d as usize) - 1
}

/// Builds every product pair from a raw constraint list, ordered
/// graded-lexicographically on the concatenated vector `(α, β)`.
pub fn lift_constraints(g: &[Polynomial], n: usize, d: u32) -> ProductConstraintSet {
    let m = g.len();
    let mut pairs = Vec::new();
    if m > 0 {
        for idx in mono_index_set(2 * m, d).into_iter().skip(1) {
            let e = idx.exponents();
            let (alpha, beta) = (e[..m].to_vec(), e[m..].to_vec());
            let poly = constraint_product(g, &alpha, &beta);
            pairs.push(ProductPair { alpha, beta, poly });
        }
    }
    ProductConstraintSet {
        d,
        m,
        pairs,
        unit: Polynomial::one(n),
    }
}

/// The redundant constraints of the lifted problem at level `d`.
pub fn lift_products(instance: &ProblemInstance, d: u32) -> Result<ProductConstraintSet> {
    if !instance.normalized {
        return Err(Error::NotNormalized);
    }
    if d == 0 {
        return Err(Error::InvalidLevel("d = 0 gives an empty lift".into()));
    }
    Ok(lift_constraints(&instance.constraints, instance.nvars(), d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polycore::Monomial;

    fn var(n: usize, i: usize) -> Polynomial {
        Polynomial::var(n, i)
    }

    #[test]
    fn normalize_affine_substitution() {
        let f = var(1, 0).pow(2);
        let inst = ProblemInstance::with_default_names(f, vec![], vec![VarKind::Box { lo: -1.0, hi: 1.0 }])
            .unwrap();
        let norm = normalize(&inst).unwrap();
        let expect = Polynomial::from_terms(1, [(vec![2], 4.0), (vec![1], -4.0), (vec![0], 1.0)]);
        assert!(norm.objective.approx_eq(&expect, 1e-15));
        assert_eq!(norm.objective_offset, 0.0);
        assert_eq!(norm.objective_scale, 1.0);
        assert_eq!(norm.constraints.len(), 2);
        assert_eq!(norm.to_original_point(&[0.5]), vec![0.0]);
    }

    #[test]
    fn normalize_scales_by_interval_bound() {
        let g = var(2, 0).add(&var(2, 1)).sub(&Polynomial::constant(2, 0.5));
        let f = var(2, 0).pow(2).add(&var(2, 1).pow(2));
        let unit = VarKind::Box { lo: 0.0, hi: 1.0 };
        let inst = ProblemInstance::with_default_names(f, vec![g.clone()], vec![unit, unit]).unwrap();
        assert_eq!(unit_box_enclosure(&g), (-0.5, 1.5));
        let norm = normalize(&inst).unwrap();
        assert!(norm.constraints[0].approx_eq(&g.scale(1.0 / 1.5), 1e-15));
        assert_eq!(norm.constraints.len(), 5);
        assert!(norm.enclosures.iter().all(|&(_, hi)| hi <= 1.0));
    }

    #[test]
    fn normalize_is_idempotent() {
        let inst = ProblemInstance::with_default_names(
            var(1, 0),
            vec![var(1, 0)],
            vec![VarKind::Box { lo: 0.0, hi: 1.0 }],
        )
        .unwrap();
        let once = normalize(&inst).unwrap();
        let twice = normalize(&once).unwrap();
        assert_eq!(once, twice);
        // x already present, only 1 - x appended
        assert_eq!(once.constraints.len(), 2);
    }

    #[test]
    fn normalize_rejects_unbounded_and_vacuous() {
        let inst =
            ProblemInstance::with_default_names(var(1, 0), vec![], vec![VarKind::Free]).unwrap();
        assert!(matches!(normalize(&inst), Err(Error::UnboundedVariable(_))));

        let g = Polynomial::constant(1, -1.0).sub(&var(1, 0));
        let inst = ProblemInstance::with_default_names(
            var(1, 0),
            vec![g],
            vec![VarKind::Box { lo: 0.0, hi: 1.0 }],
        )
        .unwrap();
        assert!(matches!(
            normalize(&inst),
            Err(Error::VacuousConstraint { index: 0, .. })
        ));
    }

    #[test]
    fn lift_examples() {
        let g = [var(1, 0)];
        let set = lift_constraints(&g, 1, 1);
        let polys: Vec<_> = set.pairs.iter().map(|p| p.poly.clone()).collect();
        assert_eq!(
            polys,
            vec![Polynomial::one(1).sub(&var(1, 0)), var(1, 0)],
            "(0,1) sorts before (1,0)"
        );

        let set = lift_constraints(&g, 1, 2);
        assert_eq!(set.len(), 5);
        let x = var(1, 0);
        let omx = Polynomial::one(1).sub(&x);
        for expect in [x.clone(), omx.clone(), x.pow(2), x.mul(&omx), omx.pow(2)] {
            assert!(set.pairs.iter().any(|p| p.poly.approx_eq(&expect, 1e-15)));
        }

        let g2 = [var(2, 0), var(2, 1)];
        assert_eq!(lift_constraints(&g2, 2, 2).len(), 14);
    }

    #[test]
    fn lift_count_formula() {
        for m in 1..=3usize {
            for d in 1..=4u32 {
                let g: Vec<_> = (0..m).map(|_| var(1, 0)).collect();
                assert_eq!(lift_constraints(&g, 1, d).len(), lifted_pair_count(m, d));
            }
        }
    }

    #[test]
    fn lift_requires_normalized_and_positive_level() {
        let inst = ProblemInstance::with_default_names(
            var(1, 0),
            vec![var(1, 0)],
            vec![VarKind::Box { lo: 0.0, hi: 1.0 }],
        )
        .unwrap();
        assert!(matches!(lift_products(&inst, 1), Err(Error::NotNormalized)));
        let norm = normalize(&inst).unwrap();
        assert!(matches!(lift_products(&norm, 0), Err(Error::InvalidLevel(_))));
        let set = lift_products(&norm, 2).unwrap();
        assert_eq!(set.unit, Polynomial::one(1));
        assert!(set.pairs.windows(2).all(|w| {
            let a: Vec<u32> = w[0].alpha.iter().chain(&w[0].beta).copied().collect();
            let b: Vec<u32> = w[1].alpha.iter().chain(&w[1].beta).copied().collect();
            Monomial::new(a) < Monomial::new(b)
        }));
    }
}
