//! Solvers for [`ConicProgram`]: a homogeneous self-dual interior-point
//! method for free × nonnegative × PSD blocks, and a dense simplex used to
//! cross-check LPs.

mod cones;
mod ipm;
mod presolve;
mod simplex;

use std::fmt;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::relax::{BlockKind, ConicProgram};

pub use simplex::solve_lp_reference;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    /// The (maximization) program has no feasible point; for a relaxation
    /// this means the bound is −∞.
    Infeasible,
    Unbounded,
    NumericalTrouble,
    IterationLimit,
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::NumericalTrouble => "numerical-trouble",
            SolveStatus::IterationLimit => "iteration-limit",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Fraction of the distance to the cone boundary taken per step.
    pub step_fraction: f64,
    /// A ray only counts as an infeasibility certificate when its objective
    /// exceeds this value relative to its norm.
    pub infeasibility_threshold: f64,
    pub predictor_corrector: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tolerance: 1e-8,
            max_iterations: 200,
            step_fraction: 0.98,
            infeasibility_threshold: 1e-10,
            predictor_corrector: true,
        }
    }
}

impl SolverConfig {
    pub fn with_tolerance(tolerance: f64) -> Self {
        SolverConfig {
            tolerance,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<(), String> {
        if !(self.tolerance > 0.0) {
            return Err("tolerance must be positive".into());
        }
        if !(self.step_fraction > 0.0 && self.step_fraction < 1.0) {
            return Err("step fraction must lie in (0, 1)".into());
        }
        Ok(())
    }
}

/// Value of one variable block.
#[derive(Clone, Debug, PartialEq)]
pub enum BlockValue {
    Vector(Vec<f64>),
    Matrix(DMatrix<f64>),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Residuals {
    /// `‖Ax − b‖ / (1 + ‖b‖ + ‖Ax‖)`.
    pub primal: f64,
    /// `‖Aᵀy + s − c‖ / (1 + ‖c‖ + max(‖Aᵀy‖, ‖s‖))`.
    pub dual: f64,
    /// `|primal − dual objective| / (1 + |primal objective|)`.
    pub gap: f64,
}

/// Farkas-type evidence attached to Infeasible / Unbounded results.
#[derive(Clone, Debug, PartialEq)]
pub enum Ray {
    /// `y` with `bᵀy = −1` and `Aᵀy ∈ K*`: no feasible point exists.
    Dual(Vec<f64>),
    /// `x ∈ K` with `Ax = 0` and `costᵀx = 1`.
    Primal(Vec<BlockValue>),
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Primal objective `cost·x` of the maximization; −∞ if infeasible,
    /// +∞ if unbounded.
    pub objective: f64,
    /// Dual objective `bᵀy` of the maximization (an upper bound at optimum).
    pub dual_objective: f64,
    pub primal: Vec<BlockValue>,
    /// One multiplier per row, signed for the maximization form.
    pub dual: Vec<f64>,
    pub residuals: Residuals,
    pub iterations: usize,
    pub time_ms: u64,
    pub ray: Option<Ray>,
    /// Largest violation measured when the ray was verified.
    pub ray_violation: Option<f64>,
}

impl SolveResult {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    /// Value of a scalar free or nonnegative block entry.
    pub fn scalar(&self, block: usize, index: usize) -> Option<f64> {
        match self.primal.get(block)? {
            BlockValue::Vector(v) => v.get(index).copied(),
            BlockValue::Matrix(_) => None,
        }
    }
}

/// Anything that can solve a [`ConicProgram`] and report with the same status
/// taxonomy.
pub trait Backend {
    fn name(&self) -> &'static str;
    fn solve(&self, program: &ConicProgram, config: &SolverConfig) -> SolveResult;
}

/// The default interior-point backend.
#[derive(Clone, Copy, Debug, Default)]
pub struct InteriorPoint;

impl Backend for InteriorPoint {
    fn name(&self) -> &'static str {
        "hsde-ipm"
    }
    fn solve(&self, program: &ConicProgram, config: &SolverConfig) -> SolveResult {
        solve(program, config)
    }
}

/// Dense simplex; LP only, at most 200 variables. Programs outside that scope
/// come back as `NumericalTrouble`.
#[derive(Clone, Copy, Debug, Default)]
pub struct ReferenceSimplex;

impl Backend for ReferenceSimplex {
    fn name(&self) -> &'static str {
        "reference-simplex"
    }
    fn solve(&self, program: &ConicProgram, _config: &SolverConfig) -> SolveResult {
        match solve_lp_reference(program) {
            Ok(r) => r,
            Err(e) => {
                log::warn!("reference simplex: {e}");
                SolveResult::failed(program, SolveStatus::NumericalTrouble, 0, 0)
            }
        }
    }
}

/// Solves `program` with the interior-point method.
pub fn solve(program: &ConicProgram, config: &SolverConfig) -> SolveResult {
    let start = Instant::now();
    if let Err(e) = config.validate().and_then(|_| program.validate()) {
        log::error!("solve rejected: {e}");
        return SolveResult::failed(program, SolveStatus::NumericalTrouble, 0, 0);
    }
    let sf = StandardForm::from_program(program);
    let mut result = match presolve::presolve(&sf) {
        presolve::Outcome::Infeasible(y) => {
            let mut r = SolveResult::failed(program, SolveStatus::Infeasible, 0, 0);
            r.objective = f64::NEG_INFINITY;
            r.ray_violation = Some(sf.dual_ray_violation(&y));
            let by = sf.b.dot(&y);
            r.ray = Some(Ray::Dual(y.iter().map(|v| -v / by).collect()));
            r
        }
        presolve::Outcome::Unbounded(x) => {
            let mut r = SolveResult::failed(program, SolveStatus::Unbounded, 0, 0);
            r.objective = f64::INFINITY;
            r.ray_violation = Some(sf.primal_ray_violation(&x));
            r.ray = Some(Ray::Primal(sf.block_values(&(&x / -sf.c.dot(&x)))));
            r
        }
        presolve::Outcome::Reduced(red) => {
            let out = ipm::run(&red.form, config);
            sf.finish(&red, out)
        }
    };
    result.time_ms = start.elapsed().as_millis() as u64;
    log::debug!(
        "{} d={} k={}: {} after {} iterations, objective {}",
        program.hierarchy,
        program.d,
        program.k,
        result.status,
        result.iterations,
        result.objective
    );
    result
}

impl SolveResult {
    fn failed(program: &ConicProgram, status: SolveStatus, iterations: usize, time_ms: u64) -> Self {
        SolveResult {
            status,
            objective: f64::NAN,
            dual_objective: f64::NAN,
            primal: zero_values(program),
            dual: vec![0.0; program.num_rows()],
            residuals: Residuals::default(),
            iterations,
            time_ms,
            ray: None,
            ray_violation: None,
        }
    }
}

fn zero_values(program: &ConicProgram) -> Vec<BlockValue> {
    program
        .blocks
        .iter()
        .map(|b| match b.kind {
            BlockKind::Psd => BlockValue::Matrix(DMatrix::zeros(b.size, b.size)),
            _ => BlockValue::Vector(vec![0.0; b.size]),
        })
        .collect()
}

/// `min cᵀx  s.t.  Ax = b,  x ∈ ℝ^nf × ℝ₊^nl × Π S₊^p` with PSD blocks in
/// scaled-vector form (off-diagonals times √2). Columns are ordered free,
/// nonnegative, PSD.
#[derive(Clone, Debug)]
pub(crate) struct StandardForm {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: DVector<f64>,
    pub nf: usize,
    pub nl: usize,
    pub psd: Vec<usize>,
    /// First internal column of each program block.
    block_start: Vec<usize>,
    block_kind: Vec<(BlockKind, usize)>,
}

impl StandardForm {
    fn from_program(program: &ConicProgram) -> Self {
        let nf: usize = program
            .blocks
            .iter()
            .filter(|b| b.kind == BlockKind::Free)
            .map(|b| b.dim())
            .sum();
        let nl: usize = program
            .blocks
            .iter()
            .filter(|b| b.kind == BlockKind::Nonneg)
            .map(|b| b.dim())
            .sum();
        let (mut of, mut ol, mut op) = (0, nf, nf + nl);
        let mut block_start = Vec::new();
        let mut psd = Vec::new();
        for b in &program.blocks {
            let slot = match b.kind {
                BlockKind::Free => &mut of,
                BlockKind::Nonneg => &mut ol,
                BlockKind::Psd => {
                    psd.push(b.size);
                    &mut op
                }
            };
            block_start.push(*slot);
            *slot += b.dim();
        }
        let ncol = op;
        let m = program.num_rows();
        let scale = |kind: BlockKind, size: usize, idx: usize| -> f64 {
            if kind == BlockKind::Psd {
                let (i, j) = crate::relax::tri_pair(size, idx);
                if i != j {
                    return std::f64::consts::SQRT_2;
                }
            }
            1.0
        };
        let mut a = DMatrix::zeros(m, ncol);
        let mut b = DVector::zeros(m);
        for (r, row) in program.rows.iter().enumerate() {
            b[r] = row.rhs;
            for e in &row.entries {
                let blk = &program.blocks[e.block];
                a[(r, block_start[e.block] + e.index)] += e.value * scale(blk.kind, blk.size, e.index);
            }
        }
        let mut c = DVector::zeros(ncol);
        for (bi, blk) in program.blocks.iter().enumerate() {
            for (idx, cost) in blk.cost.iter().enumerate() {
                c[block_start[bi] + idx] = -cost * scale(blk.kind, blk.size, idx);
            }
        }
        StandardForm {
            a,
            b,
            c,
            nf,
            nl,
            psd,
            block_start,
            block_kind: program.blocks.iter().map(|b| (b.kind, b.size)).collect(),
        }
    }

    pub fn ncols(&self) -> usize {
        self.a.ncols()
    }

    pub fn nrows(&self) -> usize {
        self.a.nrows()
    }

    pub fn cones(&self) -> cones::Cones {
        cones::Cones::new(self.nl, self.psd.clone())
    }

    fn block_values(&self, x: &DVector<f64>) -> Vec<BlockValue> {
        self.block_kind
            .iter()
            .zip(&self.block_start)
            .map(|(&(kind, size), &start)| match kind {
                BlockKind::Psd => {
                    let dim = size * (size + 1) / 2;
                    BlockValue::Matrix(cones::smat(&x.rows(start, dim).into_owned(), size))
                }
                _ => BlockValue::Vector(x.rows(start, size).iter().copied().collect()),
            })
            .collect()
    }

    /// Largest violation of `Aᵀy ∈ −K*`-type conditions for a min-form dual
    /// ray `y` normalized to `bᵀy = 1`: free part `Aᵀy = 0`, cone part
    /// `−Aᵀy ∈ K*`.
    fn dual_ray_violation(&self, y: &DVector<f64>) -> f64 {
        let by = self.b.dot(y);
        if by <= 0.0 {
            return f64::INFINITY;
        }
        let z = self.a.tr_mul(y) / by;
        let free = z.rows(0, self.nf).amax();
        let cone_part = -z.rows(self.nf, self.ncols() - self.nf).into_owned();
        free.max(self.cones().distance_outside(&cone_part))
    }

    /// For a min-form primal ray `x` normalized to `cᵀx = −1`: `‖Ax‖∞` and the
    /// distance of `x` outside `K`.
    fn primal_ray_violation(&self, x: &DVector<f64>) -> f64 {
        let cx = self.c.dot(x);
        if cx >= 0.0 {
            return f64::INFINITY;
        }
        let x = x / -cx;
        let ax = (&self.a * &x).amax();
        let cone_part = x.rows(self.nf, self.ncols() - self.nf).into_owned();
        ax.max(self.cones().distance_outside(&cone_part))
    }

    fn finish(&self, red: &presolve::Reduced, out: ipm::Outcome) -> SolveResult {
        let x = red.expand_x(&out.x, self.ncols());
        let y = red.expand_y(&out.y, self.nrows());
        let mut result = SolveResult {
            status: out.status,
            objective: -self.c.dot(&x),
            dual_objective: -self.b.dot(&y),
            primal: self.block_values(&x),
            dual: y.iter().map(|v| -v).collect(),
            residuals: Residuals::default(),
            iterations: out.iterations,
            time_ms: 0,
            ray: None,
            ray_violation: None,
        };
        match out.status {
            SolveStatus::Infeasible => {
                let viol = self.dual_ray_violation(&y);
                if viol <= 1e-6 {
                    result.objective = f64::NEG_INFINITY;
                    result.ray = Some(Ray::Dual(y.iter().map(|v| -v / self.b.dot(&y)).collect()));
                    result.ray_violation = Some(viol);
                } else {
                    log::warn!("infeasibility ray failed verification ({viol:e})");
                    result.status = SolveStatus::NumericalTrouble;
                }
            }
            SolveStatus::Unbounded => {
                let viol = self.primal_ray_violation(&x);
                if viol <= 1e-6 {
                    result.objective = f64::INFINITY;
                    let scaled = &x / -self.c.dot(&x);
                    result.primal = self.block_values(&scaled);
                    result.ray = Some(Ray::Primal(self.block_values(&scaled)));
                    result.ray_violation = Some(viol);
                } else {
                    log::warn!("unboundedness ray failed verification ({viol:e})");
                    result.status = SolveStatus::NumericalTrouble;
                }
            }
            _ => {
                let s = red.expand_x(&out.s, self.ncols());
                result.residuals = self.residuals(&x, &y, &s);
                if result.status == SolveStatus::Optimal {
                    // weak duality for the maximization: dual objective bounds the primal
                    let slack = result.dual_objective - result.objective;
                    if slack < -10.0 * out.tolerance * (1.0 + result.objective.abs()) {
                        log::warn!("weak duality violated by {:e}", -slack);
                    }
                }
            }
        }
        result
    }

    fn residuals(&self, x: &DVector<f64>, y: &DVector<f64>, s: &DVector<f64>) -> Residuals {
        let ax = &self.a * x;
        let aty = self.a.tr_mul(y);
        let rp = &ax - &self.b;
        let rd = &aty + s - &self.c;
        let pobj = self.c.dot(x);
        let dobj = self.b.dot(y);
        Residuals {
            primal: rp.norm() / (1.0 + self.b.norm() + ax.norm()),
            dual: rd.norm() / (1.0 + self.c.norm() + aty.norm().max(s.norm())),
            gap: (pobj - dobj).abs() / (1.0 + pobj.abs()),
        }
    }
}
