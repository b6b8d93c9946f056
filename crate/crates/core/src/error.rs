use thiserror::Error;

/// Errors raised by the array-design library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid layout: {0}")]
    InvalidLayout(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("no grid node inside the field of view")]
    EmptyFieldOfView,

    #[error("pattern is degenerate: {0}")]
    DegeneratePattern(String),

    #[error("half-power crossing not found: {0}")]
    CrossingNotFound(String),

    #[error("first-null beamwidth undefined for aperture length {0} wavelengths (< 1)")]
    FirstNullUndefined(f64),

    #[error("infeasible design: {0}")]
    Infeasible(String),

    #[error("no free grid node: {0}")]
    NoFreeNode(String),

    #[error("invalid trace: {0}")]
    InvalidTrace(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
