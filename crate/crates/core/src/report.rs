//! Bound tables: one row per `(hierarchy, d, k)`, values in original units.

use serde::Serialize;

use crate::certify::verify_certificate;
use crate::error::Result;
use crate::problem::ProblemInstance;
use crate::relax::{build, Certificate, ConicProgram, Hierarchy};
use crate::solver::{solve, SolveResult, SolveStatus, SolverConfig};

#[derive(Clone, Debug, Serialize)]
pub struct BoundRow {
    pub hierarchy: Hierarchy,
    pub d: u32,
    pub k: u32,
    /// `None` when the relaxation is infeasible (bound −∞) or failed.
    pub bound: Option<f64>,
    pub status: SolveStatus,
    /// Certificate residual; `None` when no certificate was produced.
    pub residual: Option<f64>,
    pub iterations: usize,
    pub time_ms: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleValue {
    pub value: f64,
    pub method: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundReport {
    pub instance: String,
    pub rows: Vec<BoundRow>,
    pub oracle: Option<OracleValue>,
}

impl BoundReport {
    pub fn new(instance: impl Into<String>) -> Self {
        BoundReport {
            instance: instance.into(),
            rows: Vec::new(),
            oracle: None,
        }
    }

    /// Sorts rows by `(hierarchy, d, k)`.
    pub fn sort(&mut self) {
        self.rows.sort_by_key(|r| (r.hierarchy, r.d, r.k));
    }

    pub const CSV_HEADER: &'static str = "hierarchy,d,k,bound,status,residual,iterations,time_ms";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let bound = match (r.bound, r.status) {
                (Some(b), _) => format!("{b}"),
                (None, SolveStatus::Infeasible) => "-inf".to_string(),
                (None, _) => String::new(),
            };
            let residual = r.residual.map(|v| format!("{v:e}")).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.hierarchy, r.d, r.k, bound, r.status, residual, r.iterations, r.time_ms
            ));
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("instance: {}\n", self.instance);
        out.push_str(&format!(
            "{:<8} {:>3} {:>3} {:>16} {:<18} {:>10} {:>5} {:>8}\n",
            "hier", "d", "k", "bound", "status", "residual", "iter", "ms"
        ));
        for r in &self.rows {
            let bound = match (r.bound, r.status) {
                (Some(b), _) => format!("{b:.9}"),
                (None, SolveStatus::Infeasible) => "-inf".to_string(),
                (None, _) => "-".to_string(),
            };
            let residual = r.residual.map(|v| format!("{v:.2e}")).unwrap_or_else(|| "-".into());
            out.push_str(&format!(
                "{:<8} {:>3} {:>3} {:>16} {:<18} {:>10} {:>5} {:>8}\n",
                r.hierarchy.tag(),
                r.d,
                r.k,
                bound,
                r.status.to_string(),
                residual,
                r.iterations,
                r.time_ms
            ));
        }
        if let Some(o) = &self.oracle {
            out.push_str(&format!("oracle ({}): {:.9}\n", o.method, o.value));
        }
        out
    }
}

/// One relaxation built, solved and, when optimal, checked.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub row: BoundRow,
    pub program: ConicProgram,
    pub result: SolveResult,
    pub certificate: Option<Certificate>,
}

/// Builds and solves `hierarchy` at `(d, k)` on a normalized instance, and
/// measures the certificate residual of an optimal solve.
pub fn evaluate(instance: &ProblemInstance, hierarchy: Hierarchy, d: u32, k: u32, config: &SolverConfig) -> Result<Evaluation> {
    let program = build(instance, hierarchy, d, k)?;
    let result = solve(&program, config);
    let mut certificate = None;
    let mut residual = None;
    let mut bound = None;
    if result.status == SolveStatus::Optimal {
        let cert = Certificate::from_solution(&program, &result, instance)?;
        residual = Some(verify_certificate(instance, &cert, cert.d, cert.k)?);
        bound = Some(instance.to_original_units(result.objective));
        certificate = Some(cert);
    }
    let row = BoundRow {
        hierarchy,
        d,
        k: program.k,
        bound,
        status: result.status,
        residual,
        iterations: result.iterations,
        time_ms: result.time_ms,
    };
    Ok(Evaluation {
        row,
        program,
        result,
        certificate,
    })
}
