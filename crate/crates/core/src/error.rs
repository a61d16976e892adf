use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("variable {0} is unbounded; give it a box or mark it binary")]
    UnboundedVariable(String),

    #[error("constraint {index} is certifiably infeasible or vacuous: upper bound {upper} <= 0 over the box")]
    VacuousConstraint { index: usize, upper: f64 },

    #[error("instance is not normalized")]
    NotNormalized,

    #[error("{line}:{column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid level: {0}")]
    InvalidLevel(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("program too large for the reference simplex: {0} variables (cap 200)")]
    SizeCap(usize),

    #[error("oracle scope exceeded: {0}")]
    OracleScope(String),

    #[error("certificate residual {0:.3e} exceeds the verification gate")]
    Unverified(f64),

    #[error("not certifiable: {0}")]
    NotCertifiable(String),
}

pub type Result<T> = std::result::Result<T, Error>;
