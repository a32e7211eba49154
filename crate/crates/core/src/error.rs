use thiserror::Error;

/// Errors reported by the solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("length mismatch: expected {expected} samples, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("value {value} lies outside the admissible window ({lo}, {hi})")]
    OutsideWindow { value: f64, lo: f64, hi: f64 },

    #[error(
        "eigenvalue {lambda} is not simple (separation {separation:.3e} below {threshold:.3e})"
    )]
    DegenerateEigenvalue {
        lambda: f64,
        separation: f64,
        threshold: f64,
    },

    #[error("requested ladder level {level} but only {available} bound states lie in (0, m)")]
    MissingLevel { level: usize, available: usize },

    #[error("eigenvector iteration did not converge; residual norms {residuals:?}")]
    EigenNonConvergence { residuals: Vec<f64> },

    #[error("grid too coarse: h = {h:.4e} exceeds eps/10 = {limit:.4e} for eps = {eps}")]
    UnderResolved { h: f64, eps: f64, limit: f64 },

    #[error("malformed table: {0}")]
    Table(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
