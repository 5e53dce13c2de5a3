use thiserror::Error;

use crate::weights::ValidationReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A parameter combination is not admissible for the requested branch.
    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("invalid weight: {0}")]
    InvalidWeight(ValidationReport),

    /// A moment needed as a denominator vanished.
    #[error("degenerate weight: {0}")]
    DegenerateWeight(String),

    /// Panel refinement was exhausted before the estimates settled.
    #[error("quadrature did not converge: {message} (last estimate {estimate:e}, change {change:e})")]
    Numeric {
        message: String,
        estimate: f64,
        change: f64,
    },

    #[error("dimension mismatch: expected d = {expected}, found d = {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn parameter(msg: impl Into<String>) -> Error {
    Error::Parameter(msg.into())
}
