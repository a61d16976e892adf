//! Lagrangian dual of the lifted problem:
//! `L_d(x, λ) = f(x) − Σ λ_{αβ} p_{αβ}(x)`, `G_d(λ) = min_{x ∈ ℝⁿ} L_d(x, λ)`
//! and `ρ_d = max_{λ ≥ 0} G_d(λ)`.
//!
//! `G_d` is only evaluated exactly for univariate and convex quadratic
//! Lagrangians. Everything else goes through a multistart search whose
//! results are flagged heuristic.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::polycore::{Monomial, Polynomial};
use crate::problem::{lift_products, ProblemInstance, ProductConstraintSet};

/// Distance along the witness ray at which an unbounded Lagrangian is sampled.
const WITNESS_RADIUS: f64 = 1e3;
/// Local searches that leave this ball are read as unbounded below.
const ESCAPE_RADIUS: f64 = 1e6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvalMethod {
    Auto,
    UnivariateRoots,
    ConvexDescent,
    MultistartGrid,
}

impl fmt::Display for EvalMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EvalMethod::Auto => "auto",
            EvalMethod::UnivariateRoots => "univariate-roots",
            EvalMethod::ConvexDescent => "convex-descent",
            EvalMethod::MultistartGrid => "multistart-grid",
        })
    }
}

impl FromStr for EvalMethod {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "auto" => Ok(EvalMethod::Auto),
            "univariate-roots" => Ok(EvalMethod::UnivariateRoots),
            "convex-descent" => Ok(EvalMethod::ConvexDescent),
            "multistart-grid" => Ok(EvalMethod::MultistartGrid),
            other => Err(format!("unknown evaluation method '{other}'")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Quality {
    CertifiedExact,
    Heuristic,
}

impl fmt::Display for Quality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Quality::CertifiedExact => "certified-exact",
            Quality::Heuristic => "heuristic",
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GValue {
    /// `−∞` when `L_d(·, λ)` is unbounded below.
    pub value: f64,
    /// The minimizer, or a far point along `witness` when unbounded.
    pub minimizer: Vec<f64>,
    /// Direction along which `L_d` decreases without bound.
    pub witness: Option<Vec<f64>>,
    pub quality: Quality,
    pub method: EvalMethod,
    /// `−p_{αβ}(minimizer)`, indexed like `λ`.
    pub supgradient: Vec<f64>,
}

impl GValue {
    pub fn is_certified(&self) -> bool {
        self.quality == Quality::CertifiedExact
    }
}

/// Grid and multistart settings for the heuristic path.
#[derive(Clone, Copy, Debug)]
pub struct SearchOptions {
    /// Points per axis of the `[0,1]ⁿ` grid, used when `n ≤ 3`.
    pub grid_points: usize,
    /// Random starts when `n > 3`.
    pub samples: usize,
    /// Best grid points handed to the local search.
    pub polish: usize,
    pub seed: u64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            grid_points: 101,
            samples: 2000,
            polish: 8,
            seed: 7,
        }
    }
}

fn lift(instance: &ProblemInstance, d: u32, lambda: &[f64]) -> Result<ProductConstraintSet> {
    if !instance.normalized {
        return Err(Error::NotNormalized);
    }
    let lift = lift_products(instance, d)?;
    if lift.len() != lambda.len() {
        return Err(Error::DimensionMismatch(format!(
            "level {d} has {} product pairs, got {} multipliers",
            lift.len(),
            lambda.len()
        )));
    }
    Ok(lift)
}

fn lagrangian(f: &Polynomial, lift: &ProductConstraintSet, lambda: &[f64]) -> Polynomial {
    let mut l = f.clone();
    for (pair, &lam) in lift.pairs.iter().zip(lambda) {
        if lam != 0.0 {
            l = l.sub(&pair.poly.scale(lam));
        }
    }
    l
}

/// `f − Σ λ_{αβ} p_{αβ}` with `λ` indexed like `lift_products(instance, d)`.
pub fn assemble_lagrangian(instance: &ProblemInstance, d: u32, lambda: &[f64]) -> Result<Polynomial> {
    let lift = lift(instance, d, lambda)?;
    Ok(lagrangian(&instance.objective, &lift, lambda))
}

pub fn eval_g(instance: &ProblemInstance, d: u32, lambda: &[f64], method: EvalMethod) -> Result<GValue> {
    eval_g_with(instance, d, lambda, method, &SearchOptions::default())
}

pub fn eval_g_with(
    instance: &ProblemInstance,
    d: u32,
    lambda: &[f64],
    method: EvalMethod,
    opts: &SearchOptions,
) -> Result<GValue> {
    let lift = lift(instance, d, lambda)?;
    let l = lagrangian(&instance.objective, &lift, lambda);
    let (value, minimizer, witness, quality, used) = minimize(&l, method, opts)?;
    let supgradient = lift.pairs.iter().map(|p| -p.poly.eval(&minimizer)).collect();
    Ok(GValue {
        value,
        minimizer,
        witness,
        quality,
        method: used,
        supgradient,
    })
}

type Minimum = (f64, Vec<f64>, Option<Vec<f64>>, Quality, EvalMethod);

/// Global minimum of `l` over `ℝⁿ` by the requested method.
pub fn minimize(l: &Polynomial, method: EvalMethod, opts: &SearchOptions) -> Result<Minimum> {
    let n = l.nvars();
    let method = match method {
        EvalMethod::Auto if n == 1 => EvalMethod::UnivariateRoots,
        EvalMethod::Auto if l.degree() <= 2 => EvalMethod::ConvexDescent,
        EvalMethod::Auto => EvalMethod::MultistartGrid,
        m => m,
    };
    match method {
        EvalMethod::UnivariateRoots => {
            if n != 1 {
                return Err(Error::NotCertifiable(format!(
                    "root isolation needs one variable, the Lagrangian has {n}"
                )));
            }
            let (v, x, w) = univariate_min(l);
            Ok((v, x, w, Quality::CertifiedExact, method))
        }
        EvalMethod::ConvexDescent if l.degree() <= 2 => {
            let (v, x, w) = quadratic_min(l);
            Ok((v, x, w, Quality::CertifiedExact, method))
        }
        EvalMethod::ConvexDescent => {
            let start = vec![0.5; n];
            let (x, escaped) = newton_descent(l, start);
            Ok(heuristic_result(l, x, escaped, method))
        }
        EvalMethod::MultistartGrid | EvalMethod::Auto => {
            let (v, x, w) = multistart(l, opts);
            Ok((v, x, w, Quality::Heuristic, EvalMethod::MultistartGrid))
        }
    }
}

fn heuristic_result(l: &Polynomial, x: Vec<f64>, escaped: Option<Vec<f64>>, method: EvalMethod) -> Minimum {
    match escaped {
        Some(dir) => {
            let far: Vec<f64> = dir.iter().map(|v| v * WITNESS_RADIUS).collect();
            (f64::NEG_INFINITY, far, Some(dir), Quality::Heuristic, method)
        }
        None => (l.eval(&x), x, None, Quality::Heuristic, method),
    }
}

fn univariate_coeffs(l: &Polynomial) -> Vec<f64> {
    let mut c = vec![0.0; l.degree() as usize + 1];
    for (m, v) in l.terms() {
        c[m.degree() as usize] += v;
    }
    c
}

fn effective_degree(c: &[f64]) -> usize {
    let scale = c.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let mut deg = c.len() - 1;
    while deg > 0 && c[deg].abs() <= 1e-12 * scale {
        deg -= 1;
    }
    deg
}

/// Real roots of `Σ c_i x^i` via companion-matrix eigenvalues, Newton-polished.
pub fn real_roots(c: &[f64]) -> Vec<f64> {
    let deg = effective_degree(c);
    if deg == 0 {
        return Vec::new();
    }
    let lead = c[deg];
    let mut comp = DMatrix::zeros(deg, deg);
    for i in 1..deg {
        comp[(i, i - 1)] = 1.0;
    }
    for i in 0..deg {
        comp[(i, deg - 1)] = -c[i] / lead;
    }
    let horner = |c: &[f64], x: f64| c.iter().rev().fold(0.0, |a, v| a * x + v);
    let dc: Vec<f64> = (1..=deg).map(|i| i as f64 * c[i]).collect();
    let mut roots: Vec<f64> = comp
        .complex_eigenvalues()
        .iter()
        .filter(|z| z.im.abs() <= 1e-7 * (1.0 + z.norm()))
        .map(|z| {
            let mut x = z.re;
            for _ in 0..20 {
                let d = horner(&dc, x);
                if d == 0.0 {
                    break;
                }
                let step = horner(&c[..=deg], x) / d;
                x -= step;
                if step.abs() <= 1e-15 * (1.0 + x.abs()) {
                    break;
                }
            }
            x
        })
        .collect();
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (1.0 + b.abs()));
    roots
}

fn univariate_min(l: &Polynomial) -> (f64, Vec<f64>, Option<Vec<f64>>) {
    let c = univariate_coeffs(l);
    let deg = effective_degree(&c);
    if deg == 0 {
        return (l.eval(&[0.0]), vec![0.0], None);
    }
    if deg % 2 == 1 || c[deg] < 0.0 {
        let dir = if deg % 2 == 1 { -c[deg].signum() } else { 1.0 };
        return (f64::NEG_INFINITY, vec![dir * WITNESS_RADIUS], Some(vec![dir]));
    }
    let dc: Vec<f64> = (1..c.len()).map(|i| i as f64 * c[i]).collect();
    let mut best = (f64::INFINITY, 0.0);
    for r in real_roots(&dc) {
        let v = l.eval(&[r]);
        if v < best.0 {
            best = (v, r);
        }
    }
    (best.0, vec![best.1], None)
}

/// Gradient and Hessian of `l` at `x`.
fn derivatives(l: &Polynomial, x: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
    let n = x.len();
    let grads: Vec<Polynomial> = (0..n).map(|i| l.derivative(i)).collect();
    let g = DVector::from_iterator(n, grads.iter().map(|p| p.eval(x)));
    let h = DMatrix::from_fn(n, n, |i, j| grads[i].derivative(j).eval(x));
    (g, h)
}

/// Exact minimum of a quadratic: `−∞` for an indefinite Hessian or a linear
/// term outside its range.
fn quadratic_min(l: &Polynomial) -> (f64, Vec<f64>, Option<Vec<f64>>) {
    let n = l.nvars();
    let zero = vec![0.0; n];
    let (b, q) = derivatives(l, &zero);
    let scale = 1.0 + q.amax() + b.amax();
    let eig = SymmetricEigen::new(q.clone());
    let (imin, lmin) = eig
        .eigenvalues
        .iter()
        .copied()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap_or((0, 0.0));
    let ray = |mut v: DVector<f64>| {
        if v.dot(&b) > 0.0 {
            v = -v;
        }
        let v = v.normalize();
        let far: Vec<f64> = v.iter().map(|t| t * WITNESS_RADIUS).collect();
        (f64::NEG_INFINITY, far, Some(v.iter().copied().collect()))
    };
    if n > 0 && lmin < -1e-10 * scale {
        return ray(eig.eigenvectors.column(imin).into_owned());
    }
    let x = q.clone().svd(true, true).solve(&(-&b), 1e-10 * scale).unwrap_or_else(|_| DVector::zeros(n));
    let r = &q * &x + &b;
    if r.norm() > 1e-8 * scale {
        return ray(-r);
    }
    let x: Vec<f64> = x.iter().copied().collect();
    (l.eval(&x), x, None)
}

/// Damped Newton with backtracking; a regularized Hessian where it is not
/// positive definite. Returns the end point, or a unit escape direction when
/// the iterates run off to infinity.
fn newton_descent(l: &Polynomial, mut x: Vec<f64>) -> (Vec<f64>, Option<Vec<f64>>) {
    let n = x.len();
    let mut fx = l.eval(&x);
    for _ in 0..200 {
        let (g, h) = derivatives(l, &x);
        if g.norm() <= 1e-11 {
            break;
        }
        let eig = SymmetricEigen::new(h.clone());
        let shift = (-eig.eigenvalues.min()).max(0.0) + 1e-8 * (1.0 + h.amax());
        let reg = h + DMatrix::identity(n, n) * shift;
        let p = match reg.cholesky() {
            Some(ch) => -ch.solve(&g),
            None => -g.clone(),
        };
        let slope = g.dot(&p);
        let mut t = 1.0;
        let mut moved = false;
        while t > 1e-12 {
            let y: Vec<f64> = x.iter().zip(p.iter()).map(|(a, b)| a + t * b).collect();
            let fy = l.eval(&y);
            if fy <= fx + 1e-4 * t * slope {
                x = y;
                fx = fy;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > ESCAPE_RADIUS {
            let dir = x.iter().map(|v| v / norm).collect();
            return (x, Some(dir));
        }
        if !moved {
            break;
        }
    }
    (x, None)
}

fn multistart(l: &Polynomial, opts: &SearchOptions) -> (f64, Vec<f64>, Option<Vec<f64>>) {
    let n = l.nvars();
    let mut starts: Vec<(f64, Vec<f64>)> = Vec::new();
    if n <= 3 {
        let k = opts.grid_points.max(2);
        for flat in 0..k.pow(n as u32) {
            let mut rem = flat;
            let x: Vec<f64> = (0..n)
                .map(|_| {
                    let v = (rem % k) as f64 / (k - 1) as f64;
                    rem /= k;
                    v
                })
                .collect();
            starts.push((l.eval(&x), x));
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        for _ in 0..opts.samples {
            let x: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
            starts.push((l.eval(&x), x));
        }
    }
    starts.sort_by(|a, b| a.0.total_cmp(&b.0));
    starts.truncate(opts.polish.max(1));
    let mut best: Option<(f64, Vec<f64>)> = None;
    for (_, x0) in starts {
        let (x, escaped) = newton_descent(l, x0);
        if let Some(dir) = escaped {
            let far = dir.iter().map(|v| v * WITNESS_RADIUS).collect();
            return (f64::NEG_INFINITY, far, Some(dir));
        }
        let v = l.eval(&x);
        if best.as_ref().is_none_or(|(b, _)| v < *b) {
            best = Some((v, x));
        }
    }
    let (v, x) = best.unwrap_or((l.eval(&vec![0.0; n]), vec![0.0; n]));
    (v, x, None)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Every evaluation of `G_d` must be exact; refused otherwise.
    Certified,
    Heuristic,
}

impl FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "certified" => Ok(Mode::Certified),
            "heuristic" => Ok(Mode::Heuristic),
            other => Err(format!("unknown mode '{other}'")),
        }
    }
}

#[derive(Clone, Debug)]
pub struct AscentConfig {
    pub mode: Mode,
    /// Step `a / (b + iter)` along the normalized supgradient.
    pub a: f64,
    pub b: f64,
    pub iterations: usize,
    pub search: SearchOptions,
}

impl Default for AscentConfig {
    fn default() -> Self {
        AscentConfig {
            mode: Mode::Certified,
            a: 1.0,
            b: 10.0,
            iterations: 500,
            search: SearchOptions::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TraceRow {
    pub iter: usize,
    pub g: f64,
    pub step: f64,
    pub active: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct AscentResult {
    /// Best `G_d` value seen; `−∞` if every iterate was unbounded.
    pub rho_estimate: f64,
    pub lambda: Vec<f64>,
    pub labels: Vec<String>,
    pub quality: Quality,
    /// The projected step stopped moving `λ`.
    pub converged: bool,
    pub budget_exhausted: bool,
    pub trace: Vec<TraceRow>,
}

impl AscentResult {
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("iter,G,step,active\n");
        for r in &self.trace {
            out.push_str(&format!("{},{},{},{}\n", r.iter, r.g, r.step, r.active));
        }
        out
    }
}

/// Coefficient constraints that keep `L_d` from being trivially unbounded:
/// every monomial above `deg f`, and those of degree `deg f` when it is odd,
/// must cancel.
struct Pinning {
    a: DMatrix<f64>,
    target: DVector<f64>,
    a_pinv: DMatrix<f64>,
}

impl Pinning {
    fn new(f: &Polynomial, lift: &ProductConstraintSet) -> Option<Pinning> {
        let df = f.degree();
        let mut monos: Vec<Monomial> = Vec::new();
        for p in &lift.pairs {
            for (m, _) in p.poly.terms() {
                let pinned = m.degree() > df || (df % 2 == 1 && m.degree() == df);
                if pinned && !monos.contains(m) {
                    monos.push(m.clone());
                }
            }
        }
        if monos.is_empty() {
            return None;
        }
        let a = DMatrix::from_fn(monos.len(), lift.len(), |r, i| lift.pairs[i].poly.coeff(&monos[r]));
        let target = DVector::from_iterator(monos.len(), monos.iter().map(|m| f.coeff(m)));
        let a_pinv = a.clone().pseudo_inverse(1e-12).ok()?;
        Some(Pinning { a, target, a_pinv })
    }

    fn affine(&self, v: &DVector<f64>) -> DVector<f64> {
        v - &self.a_pinv * (&self.a * v - &self.target)
    }

    /// Dykstra's alternating projection onto `{λ ≥ 0} ∩ {Aλ = target}`.
    fn project(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut x = v.clone();
        let mut p = DVector::zeros(v.len());
        let mut q = DVector::zeros(v.len());
        for _ in 0..2000 {
            let y = self.affine(&(&x + &p));
            p = &x + &p - &y;
            let next = (&y + &q).map(|t| t.max(0.0));
            q = &y + &q - &next;
            let change = (&next - &x).amax();
            x = next;
            if change <= 1e-14 {
                break;
            }
        }
        x
    }
}

fn clamp(v: &DVector<f64>) -> DVector<f64> {
    v.map(|t| t.max(0.0))
}

/// `ρ_d` estimate by projected supgradient ascent from `λ = 0`.
pub fn maximize_g(instance: &ProblemInstance, d: u32, config: &AscentConfig) -> Result<AscentResult> {
    if !instance.normalized {
        return Err(Error::NotNormalized);
    }
    let lift = lift_products(instance, d)?;
    let n = instance.nvars();
    let f = &instance.objective;
    let method = if config.mode == Mode::Certified {
        let quadratic = f.degree() <= 2 && lift.max_degree() <= 2;
        if n != 1 && !quadratic {
            return Err(Error::NotCertifiable(format!(
                "G_{d} is only evaluated exactly for one variable or a quadratic Lagrangian; use heuristic mode"
            )));
        }
        EvalMethod::Auto
    } else if n == 1 || (f.degree() <= 2 && lift.max_degree() <= 2) {
        EvalMethod::Auto
    } else {
        EvalMethod::MultistartGrid
    };
    let pin = Pinning::new(f, &lift);
    let project = |v: &DVector<f64>| match &pin {
        Some(p) => p.project(v),
        None => clamp(v),
    };
    let mut lambda = project(&DVector::zeros(lift.len()));
    let mut best: Option<(f64, DVector<f64>)> = None;
    let mut quality = Quality::CertifiedExact;
    let mut trace = Vec::new();
    let mut converged = false;
    for iter in 0..config.iterations {
        let lam: Vec<f64> = lambda.iter().copied().collect();
        let l = lagrangian(f, &lift, &lam);
        let (value, x, _, q, _) = minimize(&l, method, &config.search)?;
        if q == Quality::Heuristic {
            quality = Quality::Heuristic;
        }
        if value.is_finite() && best.as_ref().is_none_or(|(b, _)| value > *b) {
            best = Some((value, lambda.clone()));
        }
        let g = DVector::from_iterator(lift.len(), lift.pairs.iter().map(|p| -p.poly.eval(&x)));
        let step = config.a / (config.b + iter as f64);
        // components pushing a zero multiplier negative are removed by the
        // projection anyway and would only shrink the useful step
        let gnorm = g
            .iter()
            .zip(lambda.iter())
            .filter(|(gi, li)| !(**li <= 0.0 && **gi < 0.0))
            .map(|(gi, _)| gi * gi)
            .sum::<f64>()
            .sqrt();
        trace.push(TraceRow {
            iter,
            g: value,
            step,
            active: lambda.iter().filter(|&&t| t > 0.0).count(),
        });
        if gnorm == 0.0 {
            converged = value.is_finite();
            break;
        }
        let next = project(&(&lambda + &g * (step / gnorm)));
        let moved = (&next - &lambda).amax();
        lambda = next;
        if moved <= 1e-14 && value.is_finite() {
            converged = true;
            break;
        }
    }
    let (rho, lam) = best.unwrap_or((f64::NEG_INFINITY, lambda));
    Ok(AscentResult {
        rho_estimate: rho,
        lambda: lam.iter().copied().collect(),
        labels: lift
            .pairs
            .iter()
            .map(|p| format!("a{:?}b{:?}", p.alpha, p.beta))
            .collect(),
        quality,
        converged,
        budget_exhausted: !converged,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{normalize, VarKind};

    fn unit_x() -> ProblemInstance {
        normalize(
            &ProblemInstance::with_default_names(
                Polynomial::var(1, 0),
                vec![Polynomial::var(1, 0)],
                vec![VarKind::Box { lo: 0.0, hi: 1.0 }],
            )
            .unwrap(),
        )
        .unwrap()
    }

    fn qp() -> ProblemInstance {
        let x = Polynomial::var(2, 0);
        let y = Polynomial::var(2, 1);
        let f = x.mul(&x).add(&y.mul(&y));
        let g = x.add(&y).sub(&Polynomial::constant(2, 0.5));
        normalize(&ProblemInstance::with_default_names(f, vec![g], vec![VarKind::Box { lo: 0.0, hi: 1.0 }; 2]).unwrap())
            .unwrap()
    }

    #[test]
    fn zero_multipliers_give_objective() {
        let inst = qp();
        let len = lift_products(&inst, 1).unwrap().len();
        let l = assemble_lagrangian(&inst, 1, &vec![0.0; len]).unwrap();
        assert!(l.approx_eq(&inst.objective, 0.0));
        assert!(matches!(assemble_lagrangian(&inst, 1, &[0.0]), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn cancelling_multiplier_gives_zero() {
        let inst = unit_x();
        let lift = lift_products(&inst, 1).unwrap();
        let idx = lift
            .pairs
            .iter()
            .position(|p| p.poly.approx_eq(&Polynomial::var(1, 0), 1e-15) && p.alpha.iter().sum::<u32>() == 1)
            .unwrap();
        let mut lam = vec![0.0; lift.len()];
        lam[idx] = 1.0;
        let l = assemble_lagrangian(&inst, 1, &lam).unwrap();
        assert!(l.max_abs_coeff() < 1e-15);
    }

    #[test]
    fn linear_lagrangian_is_unbounded() {
        let inst = unit_x();
        let g = eval_g(&inst, 1, &[0.0; 4], EvalMethod::Auto).unwrap();
        assert_eq!(g.value, f64::NEG_INFINITY);
        assert_eq!(g.witness, Some(vec![-1.0]));
        assert!(g.is_certified());
    }

    #[test]
    fn convex_quadratic_at_zero() {
        let inst = qp();
        let len = lift_products(&inst, 1).unwrap().len();
        let g = eval_g(&inst, 1, &vec![0.0; len], EvalMethod::Auto).unwrap();
        assert!(g.is_certified());
        assert!(g.value.abs() < 1e-14);
        assert!(g.minimizer.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn indefinite_quadratic_is_unbounded() {
        let x = Polynomial::var(2, 0);
        let y = Polynomial::var(2, 1);
        let l = x.mul(&x).sub(&y.mul(&y));
        let (v, _, w, q, _) = minimize(&l, EvalMethod::Auto, &SearchOptions::default()).unwrap();
        assert_eq!(v, f64::NEG_INFINITY);
        assert_eq!(q, Quality::CertifiedExact);
        let w = w.unwrap();
        assert!(w[0].abs() < 1e-12 && (w[1].abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quartic_roots() {
        // (x − 1)²(x + 2)² has minima at 1 and −2
        let x = Polynomial::var(1, 0);
        let p = x.sub(&Polynomial::one(1)).mul(&x.add(&Polynomial::constant(1, 2.0))).pow(2);
        let (v, m, _) = univariate_min(&p);
        assert!(v.abs() < 1e-12);
        assert!((m[0] + 2.0).abs() < 1e-9);
        let r = real_roots(&[-2.0, 0.0, 1.0]);
        assert_eq!(r.len(), 2);
        assert!((r[1] - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn heuristic_search_on_a_quartic() {
        let x = Polynomial::var(2, 0);
        let y = Polynomial::var(2, 1);
        let shifted = x.sub(&Polynomial::constant(2, 0.3)).pow(4).add(&y.sub(&Polynomial::constant(2, 0.7)).pow(2));
        let (v, m, _, q, method) = minimize(&shifted, EvalMethod::Auto, &SearchOptions::default()).unwrap();
        assert_eq!(q, Quality::Heuristic);
        assert_eq!(method, EvalMethod::MultistartGrid);
        assert!(v < 1e-10);
        assert!((m[1] - 0.7).abs() < 1e-6);
    }

    #[test]
    fn ascent_on_unit_x_reaches_zero() {
        let r = maximize_g(&unit_x(), 1, &AscentConfig::default()).unwrap();
        assert!(r.rho_estimate.abs() < 1e-9, "{}", r.rho_estimate);
        assert_eq!(r.quality, Quality::CertifiedExact);
        assert!(r.trace_csv().starts_with("iter,G,step,active\n0,"));
    }

    #[test]
    fn ascent_on_convex_qp() {
        let r = maximize_g(&qp(), 1, &AscentConfig::default()).unwrap();
        assert!((r.rho_estimate - 0.125).abs() < 1e-3, "{}", r.rho_estimate);
        assert!(r.rho_estimate <= 0.125 + 1e-8);
    }

    #[test]
    fn ascent_is_monotone_in_level() {
        let x = Polynomial::var(1, 0);
        let f = x.scale(2.0).sub(&Polynomial::one(1)).pow(2);
        let inst = normalize(
            &ProblemInstance::with_default_names(f, vec![x], vec![VarKind::Box { lo: 0.0, hi: 1.0 }]).unwrap(),
        )
        .unwrap();
        let r1 = maximize_g(&inst, 1, &AscentConfig::default()).unwrap();
        let r2 = maximize_g(&inst, 2, &AscentConfig::default()).unwrap();
        assert!(r2.rho_estimate >= r1.rho_estimate - 1e-9);
        assert!(r2.rho_estimate <= 1e-8);
    }
}
