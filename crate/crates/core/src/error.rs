use thiserror::Error;

/// Errors produced by channel algebra, protocol construction and reconstruction.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian (deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:.3e})")]
    NotPositive(f64),

    #[error("density matrix trace is {0}, expected 1")]
    InvalidTrace(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("probability {value} outside [0, 1] for row {row}")]
    ProbabilityOutOfRange { row: usize, value: f64 },

    #[error("protocol is not informationally complete (information matrix condition {0:.3e})")]
    SingularProtocol(f64),

    #[error("solver did not converge after {iterations} iterations (residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("zero expected count in row {0}")]
    ZeroExpected(usize),

    #[error("model is untestable: {0} degrees of freedom")]
    Untestable(i64),

    #[error("record does not align with protocol: {0}")]
    Misaligned(String),
}

pub type Result<T> = std::result::Result<T, Error>;
