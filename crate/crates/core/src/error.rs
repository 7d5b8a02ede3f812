use num_complex::Complex64;
use thiserror::Error;

/// Everything that can go wrong inside the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("generator counts differ: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("index {index} is outside 1..={q}")]
    IndexOutOfRange { index: usize, q: usize },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("point is not interior to the {domain}: defining function {defect:e}")]
    NotInterior { domain: &'static str, defect: f64 },

    #[error("singular point: {0}")]
    Singular(String),

    #[error("complex power base {0} lies too close to the branch cut")]
    BranchRisk(Complex64),

    #[error("symbol of class {symbol} evaluated where class {expected} was required")]
    DomainMismatch { symbol: String, expected: String },

    #[error("quadrature did not settle: last relative change {delta:e} at {nodes} nodes per axis")]
    NonConvergence { delta: f64, nodes: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param(msg: impl Into<String>) -> Error {
    Error::Parameter(msg.into())
}
