use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("invalid spin configuration: {0}")]
    InvalidSpins(String),

    #[error("n = {n} exceeds the {what} cap of {cap}")]
    CapExceeded { what: &'static str, n: usize, cap: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point is not critical: |grad U| = {grad_norm:e} exceeds tolerance {tol:e}")]
    NotCritical { grad_norm: f64, tol: f64 },

    #[error("alpha exceeded {alpha_max} without passing verification; the instance is probably ill-scaled")]
    CalibrationFailed { alpha_max: f64 },

    #[error("degenerate parameters: {0}")]
    Degenerate(String),

    #[error("numerical blow-up at t = {t} (dt may be too large)")]
    BlowUp { t: f64 },

    #[error("complex roots: alpha = {alpha} is below the three-real-root threshold {threshold}")]
    ComplexRoots { alpha: f64, threshold: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
