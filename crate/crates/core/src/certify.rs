//! Certificate verification, brute-force oracles, exactness diagnostics and
//! the obstruction variety of an exact LP-type certificate.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::polycore::Polynomial;
use crate::problem::{lift_products, normalize, ProblemInstance, VarKind};
use crate::relax::{
    binary_generator, rlt_constraints, rlt_product, BlockRole, Certificate, ConicProgram, Hierarchy, MultiplierLabel,
};
use crate::solver::{solve, SolveStatus, SolverConfig};

/// Certificates with a larger residual are refused by [`extract_variety`].
pub const RESIDUAL_GATE: f64 = 1e-6;
pub const OMEGA_THRESHOLD: f64 = 1e-7;
pub const EXACT_GAP: f64 = 1e-5;
pub const GRID_POINTS: usize = 101;
pub const GRID_MAX_VARS: usize = 3;
pub const ENUM_MAX_VARS: usize = 12;
const FEAS_TOL: f64 = 1e-9;
/// Products at most this large at the minimizer count as vanishing there.
pub const ACTIVE_TOL: f64 = 1e-6;

/// The polynomial `t + Σ λ p + Σ σ_j g_j + Σ h_i x_i(1 − x_i)` encoded by
/// `cert`, rebuilt from the instance data alone.
pub fn reconstruction(instance: &ProblemInstance, cert: &Certificate) -> Result<Polynomial> {
    let n = instance.nvars();
    let mut rhs = Polynomial::constant(n, cert.t);
    if cert.lambda.len() != cert.lambda_labels.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} multipliers but {} labels",
            cert.lambda.len(),
            cert.lambda_labels.len()
        )));
    }
    match cert.hierarchy {
        Hierarchy::Lp | Hierarchy::Bsos => {
            let lift = lift_products(instance, cert.d)?;
            if lift.len() != cert.lambda_labels.len() {
                return Err(Error::DimensionMismatch(format!(
                    "level {} has {} product pairs, certificate has {}",
                    cert.d,
                    lift.len(),
                    cert.lambda_labels.len()
                )));
            }
            for (i, pair) in lift.pairs.iter().enumerate() {
                match &cert.lambda_labels[i] {
                    MultiplierLabel::Pair { alpha, beta } if *alpha == pair.alpha && *beta == pair.beta => {}
                    other => {
                        return Err(Error::DimensionMismatch(format!(
                            "multiplier {i} is labelled {other}, expected a{:?}b{:?}",
                            pair.alpha, pair.beta
                        )))
                    }
                }
                rhs = rhs.add(&pair.poly.scale(cert.lambda[&i]));
            }
        }
        Hierarchy::Rlt01 | Hierarchy::Bsos01 => {
            let g = rlt_constraints(instance);
            for (i, label) in cert.lambda_labels.iter().enumerate() {
                let MultiplierLabel::Rlt { ell, i_set, j_set } = label else {
                    return Err(Error::DimensionMismatch(format!("multiplier {i} is not an RLT label")));
                };
                if *ell > g.len() || i_set.iter().chain(j_set).any(|&v| v >= n) {
                    return Err(Error::DimensionMismatch(format!("multiplier {i} ({label}) is out of range")));
                }
                rhs = rhs.add(&rlt_product(n, &g, *ell, i_set, j_set).scale(cert.lambda[&i]));
            }
        }
        Hierarchy::Putinar | Hierarchy::Sos => {
            if !cert.lambda.is_empty() {
                return Err(Error::DimensionMismatch(
                    "SOS certificates carry no product multipliers".into(),
                ));
            }
        }
    }
    for gb in &cert.gram {
        if gb.basis.iter().any(|m| m.nvars() != n) || gb.matrix.nrows() != gb.basis.len() {
            return Err(Error::DimensionMismatch("Gram basis does not match the instance".into()));
        }
        let sos = gb.sos(n);
        rhs = match gb.constraint {
            None => rhs.add(&sos),
            Some(j) => {
                let g = instance.constraints.get(j).ok_or_else(|| {
                    Error::DimensionMismatch(format!("Gram block refers to constraint {j}"))
                })?;
                rhs.add(&sos.mul(g))
            }
        };
    }
    for (&i, h) in &cert.h {
        if i >= n || h.nvars() != n {
            return Err(Error::DimensionMismatch(format!("h_{i} does not match the instance")));
        }
        rhs = rhs.add(&h.mul(&binary_generator(n, i)));
    }
    Ok(rhs)
}

/// Largest absolute coefficient of `f − reconstruction`.
pub fn verify_certificate(instance: &ProblemInstance, cert: &Certificate, d: u32, k: u32) -> Result<f64> {
    if !instance.normalized {
        return Err(Error::NotNormalized);
    }
    if cert.d != d || cert.k != k {
        return Err(Error::DimensionMismatch(format!(
            "certificate is for (d, k) = ({}, {}), asked to verify ({d}, {k})",
            cert.d, cert.k
        )));
    }
    let rhs = reconstruction(instance, cert)?;
    Ok(instance.objective.sub(&rhs).max_abs_coeff())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleMethod {
    /// Dense grid over the continuous coordinates plus compass-search polish;
    /// binary coordinates are enumerated. At most 3 variables.
    Grid,
    /// All of `{0,1}ⁿ`, every variable binary, at most 12 variables.
    Enumerate,
}

impl fmt::Display for OracleMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OracleMethod::Grid => "grid",
            OracleMethod::Enumerate => "enumerate",
        })
    }
}

impl FromStr for OracleMethod {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "grid" => Ok(OracleMethod::Grid),
            "enumerate" => Ok(OracleMethod::Enumerate),
            other => Err(format!("unknown oracle '{other}'")),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleResult {
    pub method: OracleMethod,
    /// Best value found, original units.
    pub value: f64,
    /// Same value for the normalized objective.
    pub value_normalized: f64,
    /// Minimizer in normalized coordinates.
    pub minimizer: Vec<f64>,
    pub minimizer_original: Vec<f64>,
}

fn normalized(instance: &ProblemInstance) -> Result<ProblemInstance> {
    if instance.normalized {
        Ok(instance.clone())
    } else {
        normalize(instance)
    }
}

fn feasible(inst: &ProblemInstance, x: &[f64]) -> bool {
    inst.constraints.iter().all(|g| g.eval(x) >= -FEAS_TOL)
}

fn oracle_result(inst: &ProblemInstance, method: OracleMethod, best: Option<(f64, Vec<f64>)>) -> Result<OracleResult> {
    let (v, x) = best.ok_or_else(|| Error::InvalidInstance("oracle found no feasible point".into()))?;
    Ok(OracleResult {
        method,
        value: inst.to_original_units(v),
        value_normalized: v,
        minimizer_original: inst.to_original_point(&x),
        minimizer: x,
    })
}

/// Minimum over `{0,1}ⁿ ∩ K`.
pub fn enumeration_oracle(instance: &ProblemInstance) -> Result<OracleResult> {
    let inst = normalized(instance)?;
    let n = inst.nvars();
    if !inst.is_all_binary() {
        return Err(Error::OracleScope("enumeration needs every variable binary".into()));
    }
    if n > ENUM_MAX_VARS {
        return Err(Error::OracleScope(format!("{n} variables exceed the enumeration cap {ENUM_MAX_VARS}")));
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 0..(1usize << n) {
        let x: Vec<f64> = (0..n).map(|i| ((mask >> i) & 1) as f64).collect();
        if !feasible(&inst, &x) {
            continue;
        }
        let v = inst.objective.eval(&x);
        if best.as_ref().is_none_or(|(b, _)| v < *b) {
            best = Some((v, x));
        }
    }
    oracle_result(&inst, OracleMethod::Enumerate, best)
}

/// Grid search over `[0,1]ⁿ ∩ K` with `GRID_POINTS` per continuous axis,
/// then compass-search polish of the best candidates.
pub fn grid_oracle(instance: &ProblemInstance) -> Result<OracleResult> {
    let inst = normalized(instance)?;
    let n = inst.nvars();
    if n > GRID_MAX_VARS {
        return Err(Error::OracleScope(format!("{n} variables exceed the grid cap {GRID_MAX_VARS}")));
    }
    let binary: Vec<bool> = inst.kinds.iter().map(|k| *k == VarKind::Binary).collect();
    let axis = |i: usize| -> Vec<f64> {
        if binary[i] {
            vec![0.0, 1.0]
        } else {
            (0..GRID_POINTS).map(|k| k as f64 / (GRID_POINTS - 1) as f64).collect()
        }
    };
    let axes: Vec<Vec<f64>> = (0..n).map(axis).collect();
    let total: usize = axes.iter().map(Vec::len).product();
    let mut candidates: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut x = vec![0.0; n];
    for flat in 0..total {
        let mut rem = flat;
        for i in 0..n {
            x[i] = axes[i][rem % axes[i].len()];
            rem /= axes[i].len();
        }
        if !feasible(&inst, &x) {
            continue;
        }
        let v = inst.objective.eval(&x);
        candidates.push((v, x.clone()));
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0));
    candidates.truncate(10);
    let best = candidates
        .into_iter()
        .map(|(v, x)| polish(&inst, x, v, &binary))
        .min_by(|a, b| a.0.total_cmp(&b.0));
    oracle_result(&inst, OracleMethod::Grid, best)
}

fn polish(inst: &ProblemInstance, mut x: Vec<f64>, mut fx: f64, fixed: &[bool]) -> (f64, Vec<f64>) {
    let n = x.len();
    let free: Vec<usize> = (0..n).filter(|&i| !fixed[i]).collect();
    if free.is_empty() {
        return (fx, x);
    }
    let dirs: Vec<Vec<f64>> = (1..3usize.pow(free.len() as u32))
        .map(|mut code| {
            let mut d = vec![0.0; n];
            for &i in &free {
                d[i] = (code % 3) as f64 - 1.0;
                code /= 3;
            }
            d
        })
        .collect();
    let mut h = 1.0 / (GRID_POINTS - 1) as f64;
    while h > 1e-12 {
        let mut moved = false;
        for d in &dirs {
            let y: Vec<f64> = x.iter().zip(d).map(|(a, b)| a + h * b).collect();
            if y.iter().any(|v| !(0.0..=1.0).contains(v)) || !feasible(inst, &y) {
                continue;
            }
            let fy = inst.objective.eval(&y);
            if fy < fx {
                x = y;
                fx = fy;
                moved = true;
                break;
            }
        }
        if !moved {
            h *= 0.5;
        }
    }
    (fx, x)
}

pub fn oracle(instance: &ProblemInstance, method: OracleMethod) -> Result<OracleResult> {
    match method {
        OracleMethod::Grid => grid_oracle(instance),
        OracleMethod::Enumerate => enumeration_oracle(instance),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Exactness {
    pub exact: bool,
    /// `f*_oracle − bound`, original units.
    pub gap: f64,
    pub oracle: OracleResult,
}

/// Compares `bound` (original units; −∞ allowed) with an oracle optimum.
pub fn exactness_check(instance: &ProblemInstance, bound: f64, method: OracleMethod) -> Result<Exactness> {
    let oracle = oracle(instance, method)?;
    Ok(exactness_against(bound, oracle))
}

pub fn exactness_against(bound: f64, oracle: OracleResult) -> Exactness {
    let gap = oracle.value - bound;
    if gap < -RESIDUAL_GATE {
        log::warn!("bound {bound} exceeds the oracle value {} by {:e}", oracle.value, -gap);
    }
    Exactness {
        exact: gap <= EXACT_GAP,
        gap,
        oracle,
    }
}

/// The product polynomial behind each multiplier label of `program`.
pub fn label_products(instance: &ProblemInstance, program: &ConicProgram) -> Result<Vec<Polynomial>> {
    let n = instance.nvars();
    let mut out = Vec::with_capacity(program.lambda_labels.len());
    let lift = match program.hierarchy {
        Hierarchy::Lp | Hierarchy::Bsos => Some(lift_products(instance, program.d)?),
        _ => None,
    };
    let g = rlt_constraints(instance);
    for (i, label) in program.lambda_labels.iter().enumerate() {
        match (label, &lift) {
            (MultiplierLabel::Pair { .. }, Some(lift)) => out.push(lift.pairs[i].poly.clone()),
            (MultiplierLabel::Rlt { ell, i_set, j_set }, _) => out.push(rlt_product(n, &g, *ell, i_set, j_set)),
            _ => return Err(Error::DimensionMismatch(format!("label {label} does not fit {}", program.hierarchy))),
        }
    }
    Ok(out)
}

/// Re-solves `program` with the multipliers of products that do not vanish at
/// `x_star` fixed at zero. An exact certificate never uses those products, so
/// when the restricted program keeps the bound this removes the small
/// interior-point multipliers that would otherwise enter the support.
/// Returns `None` when the restricted solve is not optimal.
pub fn refine_support(
    instance: &ProblemInstance,
    program: &ConicProgram,
    x_star: &[f64],
    config: &SolverConfig,
) -> Result<Option<Certificate>> {
    let products = label_products(instance, program)?;
    let keep: Vec<bool> = products.iter().map(|p| p.eval(x_star).abs() <= ACTIVE_TOL).collect();
    let Some(mb) = program.blocks.iter().position(|b| b.role == BlockRole::Multipliers) else {
        return Err(Error::NotCertifiable("program has no product multipliers".into()));
    };
    let mut remap = vec![None; keep.len()];
    let mut kept = 0;
    for (i, &k) in keep.iter().enumerate() {
        if k {
            remap[i] = Some(kept);
            kept += 1;
        }
    }
    let mut restricted = program.clone();
    let block = &mut restricted.blocks[mb];
    block.size = kept;
    block.cost = (0..keep.len()).filter(|&i| keep[i]).map(|i| program.blocks[mb].cost[i]).collect();
    for row in &mut restricted.rows {
        row.entries.retain_mut(|e| {
            if e.block != mb {
                return true;
            }
            match remap[e.index] {
                Some(j) => {
                    e.index = j;
                    true
                }
                None => false,
            }
        });
    }
    restricted.lambda_labels = (0..keep.len())
        .filter(|&i| keep[i])
        .map(|i| program.lambda_labels[i].clone())
        .collect();
    let result = solve(&restricted, config);
    if result.status != SolveStatus::Optimal {
        return Ok(None);
    }
    let mut cert = Certificate::from_solution(&restricted, &result, instance)?;
    cert.lambda = (0..keep.len())
        .map(|i| (i, remap[i].map_or(0.0, |j| cert.lambda.get(&j).copied().unwrap_or(0.0))))
        .collect();
    cert.lambda_labels = program.lambda_labels.clone();
    Ok(Some(cert))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Constancy {
    /// `|f − f*| ≤ 1e-6` on every sample.
    Constant,
    /// `f ≥ f* − 1e-6` on every sample, not constant.
    Minimized,
    Violated,
    NoSamples,
}

#[derive(Clone, Debug, Serialize)]
pub struct OmegaEntry {
    pub index: usize,
    pub label: MultiplierLabel,
    pub value: f64,
    /// Active lower constraints in the product (`J¹`); empty for RLT labels.
    pub j1: Vec<usize>,
    /// Active upper constraints in the product (`J²`); empty for RLT labels.
    pub j2: Vec<usize>,
    #[serde(serialize_with = "ser_poly")]
    pub generator: Polynomial,
}

fn ser_poly<S: Serializer>(p: &Polynomial, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format!("{p:?}"))
}

fn ser_polys<S: Serializer>(p: &[Polynomial], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(p.iter().map(|q| format!("{q:?}")))
}

#[derive(Clone, Debug, Serialize)]
pub struct VarietyReport {
    pub threshold: f64,
    pub omega: Vec<OmegaEntry>,
    /// `I₁`: constraints with `g_j(x*) = 0`.
    pub active_lower: Vec<usize>,
    /// `I₂`: constraints with `g_j(x*) = 1`.
    pub active_upper: Vec<usize>,
    /// Distinct generators of `V`.
    #[serde(serialize_with = "ser_polys")]
    pub generators: Vec<Polynomial>,
    pub max_generator_at_minimizer: f64,
    pub generators_vanish: bool,
    /// `σ(x*)` for the free SOS term (0 without one).
    pub sigma_at_minimizer: f64,
    /// RLT only: every positive multiplier's `Π x_i Π (1 − x_j)` vanishes at `x*`.
    pub ij_products_vanish: Option<bool>,
    pub f_star: f64,
    pub constancy: Constancy,
    pub sample_count: usize,
    /// Up to 32 sampled points of `V`.
    pub samples: Vec<Vec<f64>>,
    pub witness: Option<Vec<f64>>,
}

/// Obstruction variety of an exact certificate at a global minimizer `x_star`
/// (normalized coordinates). LP-type certificates only.
pub fn extract_variety(instance: &ProblemInstance, cert: &Certificate, x_star: &[f64]) -> Result<VarietyReport> {
    extract_variety_with(instance, cert, x_star, OMEGA_THRESHOLD)
}

pub fn extract_variety_with(instance: &ProblemInstance, cert: &Certificate, x_star: &[f64], threshold: f64) -> Result<VarietyReport> {
    if !matches!(
        cert.hierarchy,
        Hierarchy::Lp | Hierarchy::Bsos | Hierarchy::Rlt01 | Hierarchy::Bsos01
    ) {
        return Err(Error::NotCertifiable(format!(
            "variety extraction needs product multipliers; {} has none",
            cert.hierarchy
        )));
    }
    let n = instance.nvars();
    if x_star.len() != n {
        return Err(Error::DimensionMismatch(format!("minimizer has {} coordinates, expected {n}", x_star.len())));
    }
    let residual = verify_certificate(instance, cert, cert.d, cert.k)?;
    if residual > RESIDUAL_GATE {
        return Err(Error::Unverified(residual));
    }
    let gvals: Vec<f64> = instance.constraints.iter().map(|g| g.eval(x_star)).collect();
    let active_lower: Vec<usize> = (0..gvals.len()).filter(|&j| gvals[j].abs() <= 1e-6).collect();
    let active_upper: Vec<usize> = (0..gvals.len()).filter(|&j| (1.0 - gvals[j]).abs() <= 1e-6).collect();

    let rlt_g = rlt_constraints(instance);
    let mut omega = Vec::new();
    let mut ij_vanish = None;
    for i in cert.support(threshold) {
        let label = cert.lambda_labels[i].clone();
        let (j1, j2, generator) = match &label {
            MultiplierLabel::Pair { alpha, beta } => {
                let j1: Vec<usize> = active_lower.iter().copied().filter(|&j| alpha[j] > 0).collect();
                let j2: Vec<usize> = active_upper.iter().copied().filter(|&j| beta[j] > 0).collect();
                let mut gen = Polynomial::one(n);
                for &j in &j1 {
                    gen = gen.mul(&instance.constraints[j]);
                }
                for &j in &j2 {
                    gen = gen.mul(&Polynomial::one(n).sub(&instance.constraints[j]));
                }
                (j1, j2, gen)
            }
            MultiplierLabel::Rlt { ell, i_set, j_set } => {
                let ij = rlt_product(n, &rlt_g, 0, i_set, j_set);
                let vanish = ij_vanish.get_or_insert(true);
                *vanish &= ij.eval(x_star).abs() <= 1e-8;
                (Vec::new(), Vec::new(), rlt_product(n, &rlt_g, *ell, i_set, j_set))
            }
        };
        omega.push(OmegaEntry {
            index: i,
            value: cert.lambda[&i],
            label,
            j1,
            j2,
            generator,
        });
    }
    let mut generators: Vec<Polynomial> = Vec::new();
    for e in &omega {
        if !generators.iter().any(|g| g.approx_eq(&e.generator, 1e-12)) {
            generators.push(e.generator.clone());
        }
    }
    let max_gen = generators
        .iter()
        .map(|g| g.eval(x_star).abs())
        .fold(0.0, f64::max);
    let sigma_at = cert.sigma0(n).eval(x_star);
    let f_star = instance.objective.eval(x_star);

    let samples = sample_variety(instance, &generators);
    let k_zero = matches!(cert.hierarchy, Hierarchy::Lp | Hierarchy::Rlt01) || cert.k == 0;
    let mut constancy = if samples.is_empty() {
        Constancy::NoSamples
    } else {
        Constancy::Constant
    };
    let mut witness = None;
    for x in &samples {
        let fx = instance.objective.eval(x);
        if (fx - f_star).abs() <= 1e-6 {
            continue;
        }
        if !k_zero && fx >= f_star - 1e-6 {
            if constancy == Constancy::Constant {
                constancy = Constancy::Minimized;
                witness.get_or_insert_with(|| x.clone());
            }
            continue;
        }
        constancy = Constancy::Violated;
        witness = Some(x.clone());
        break;
    }
    Ok(VarietyReport {
        threshold,
        omega,
        active_lower,
        active_upper,
        max_generator_at_minimizer: max_gen,
        generators_vanish: max_gen <= 1e-8,
        generators,
        sigma_at_minimizer: sigma_at,
        ij_products_vanish: ij_vanish,
        f_star,
        constancy,
        sample_count: samples.len(),
        samples: samples.into_iter().take(32).collect(),
        witness,
    })
}

/// Points of `V ∩ [0,1]ⁿ`: enumeration of `{0,1}ⁿ` when every variable is
/// binary, otherwise (n ≤ 2) grid and random seeds projected onto the common
/// zero set by Gauss–Newton and kept when every `|generator| ≤ 1e-6`.
pub fn sample_variety(instance: &ProblemInstance, generators: &[Polynomial]) -> Vec<Vec<f64>> {
    let n = instance.nvars();
    let on_v = |x: &[f64]| generators.iter().all(|g| g.eval(x).abs() <= 1e-6);
    if instance.is_all_binary() {
        if n > ENUM_MAX_VARS {
            return Vec::new();
        }
        return (0..(1usize << n))
            .map(|mask| (0..n).map(|i| ((mask >> i) & 1) as f64).collect::<Vec<_>>())
            .filter(|x| on_v(x))
            .collect();
    }
    if n > 2 {
        return Vec::new();
    }
    let mut seeds: Vec<Vec<f64>> = Vec::new();
    let per_axis: usize = if n == 1 { 201 } else { 41 };
    for flat in 0..per_axis.pow(n as u32) {
        let mut rem = flat;
        let mut x = vec![0.0; n];
        for xi in x.iter_mut() {
            *xi = (rem % per_axis) as f64 / (per_axis - 1) as f64;
            rem /= per_axis;
        }
        seeds.push(x);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for _ in 0..500 {
        seeds.push((0..n).map(|_| rng.gen::<f64>()).collect());
    }
    let grads: Vec<Vec<Polynomial>> = generators
        .iter()
        .map(|g| (0..n).map(|i| g.derivative(i)).collect())
        .collect();
    let mut out: Vec<Vec<f64>> = Vec::new();
    for seed in seeds {
        let Some(x) = project(generators, &grads, seed) else {
            continue;
        };
        if x.iter().any(|v| !(-1e-9..=1.0 + 1e-9).contains(v)) || !on_v(&x) {
            continue;
        }
        if !out.iter().any(|y| y.iter().zip(&x).all(|(a, b)| (a - b).abs() <= 1e-6)) {
            out.push(x);
        }
    }
    out
}

fn project(gens: &[Polynomial], grads: &[Vec<Polynomial>], mut x: Vec<f64>) -> Option<Vec<f64>> {
    let n = x.len();
    if gens.is_empty() {
        return Some(x);
    }
    for _ in 0..40 {
        let r = DVector::from_iterator(gens.len(), gens.iter().map(|g| g.eval(&x)));
        if r.amax() <= 1e-12 {
            break;
        }
        let j = DMatrix::from_fn(gens.len(), n, |k, i| grads[k][i].eval(&x));
        let step = j.svd(true, true).solve(&r, 1e-12).ok()?;
        for i in 0..n {
            x[i] -= step[i];
        }
        if x.iter().any(|v| !v.is_finite()) {
            return None;
        }
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    use crate::polycore::gram_basis;
    use crate::relax::GramBlock;

    fn square_instance() -> ProblemInstance {
        let f = Polynomial::from_terms(1, [(vec![2], 4.0), (vec![1], -4.0), (vec![0], 1.0)]);
        normalize(
            &ProblemInstance::with_default_names(f, vec![Polynomial::var(1, 0)], vec![VarKind::Box { lo: 0.0, hi: 1.0 }])
                .unwrap(),
        )
        .unwrap()
    }

    fn hand_certificate(inst: &ProblemInstance) -> Certificate {
        let lift = lift_products(inst, 1).unwrap();
        let gb = gram_basis(1, 1);
        Certificate {
            hierarchy: Hierarchy::Bsos,
            d: 1,
            k: 1,
            t: 0.0,
            lambda: (0..lift.len()).map(|i| (i, 0.0)).collect(),
            lambda_labels: lift
                .pairs
                .iter()
                .map(|p| MultiplierLabel::Pair { alpha: p.alpha.clone(), beta: p.beta.clone() })
                .collect(),
            gram: vec![GramBlock {
                constraint: None,
                basis: gb.basis.clone(),
                matrix: DMatrix::from_row_slice(2, 2, &[1.0, -2.0, -2.0, 4.0]),
            }],
            h: BTreeMap::new(),
            bound_original_units: 0.0,
        }
    }

    #[test]
    fn hand_certificate_is_exact() {
        let inst = square_instance();
        let cert = hand_certificate(&inst);
        assert_eq!(verify_certificate(&inst, &cert, 1, 1).unwrap(), 0.0);
        cert.check_invariants().unwrap();
    }

    #[test]
    fn perturbed_multiplier_shows_in_residual() {
        let inst = square_instance();
        let mut cert = hand_certificate(&inst);
        // the pair whose product is x, i.e. alpha = (1, 0)
        let idx = cert
            .lambda_labels
            .iter()
            .position(|l| matches!(l, MultiplierLabel::Pair { alpha, beta } if alpha == &vec![1, 0] && beta == &vec![0, 0]))
            .unwrap();
        cert.lambda.insert(idx, 1e-3);
        let r = verify_certificate(&inst, &cert, 1, 1).unwrap();
        assert!((r - 1e-3).abs() < 1e-15);
    }

    #[test]
    fn level_mismatch_is_an_error() {
        let inst = square_instance();
        let cert = hand_certificate(&inst);
        assert!(matches!(verify_certificate(&inst, &cert, 2, 1), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn oracles_on_small_instances() {
        let inst = square_instance();
        let g = grid_oracle(&inst).unwrap();
        assert!(g.value.abs() < 1e-12);
        assert!((g.minimizer[0] - 0.5).abs() < 1e-9);

        let f = Polynomial::var(2, 0).sub(&Polynomial::var(2, 1));
        let bin = ProblemInstance::with_default_names(f, vec![], vec![VarKind::Binary; 2]).unwrap();
        let e = enumeration_oracle(&bin).unwrap();
        assert_eq!(e.value, -1.0);
        assert_eq!(e.minimizer, vec![0.0, 1.0]);
        assert!(matches!(enumeration_oracle(&inst), Err(Error::OracleScope(_))));
    }

    #[test]
    fn grid_oracle_scope() {
        let f = Polynomial::var(4, 0);
        let inst = ProblemInstance::with_default_names(f, vec![], vec![VarKind::Box { lo: 0.0, hi: 1.0 }; 4]).unwrap();
        assert!(matches!(grid_oracle(&inst), Err(Error::OracleScope(_))));
    }

    #[test]
    fn constant_objective_is_exact() {
        let f = Polynomial::constant(1, 3.0);
        let inst = ProblemInstance::with_default_names(f, vec![], vec![VarKind::Box { lo: 0.0, hi: 1.0 }]).unwrap();
        let ex = exactness_check(&inst, 3.0, OracleMethod::Grid).unwrap();
        assert!(ex.exact);
        assert_eq!(ex.gap, 0.0);
    }

    #[test]
    fn variety_sampling_finds_isolated_root() {
        let inst = square_instance();
        let gens = vec![Polynomial::var(1, 0).sub(&Polynomial::constant(1, 0.25))];
        let s = sample_variety(&inst, &gens);
        assert_eq!(s.len(), 1);
        assert!((s[0][0] - 0.25).abs() < 1e-9);
    }
}
