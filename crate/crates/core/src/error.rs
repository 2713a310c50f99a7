use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("matrix must have at least one row and one column")]
    EmptyMatrix,

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is singular over GF(2)")]
    Singular,

    #[error("kernel size {0} is outside the supported range 1..=64")]
    KernelSize(usize),

    #[error("size {size} exceeds the configured cap {cap}")]
    SizeOverflow { size: u128, cap: u128 },

    #[error("index {index} out of range 1..={len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("exact enumeration limited to l <= {cap} (got l = {ell}); use the Monte-Carlo estimator")]
    ExactCapExceeded { ell: usize, cap: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("probability {0} outside [0, 1]")]
    Probability(f64),

    #[error("bound is vacuous: rho = {rho} <= alpha = {alpha}")]
    VacuousBound { rho: f64, alpha: f64 },

    #[error("power iteration did not converge after {iterations} iterations (last step {last_step:e})")]
    NoConvergence { iterations: usize, last_step: f64 },

    #[error("kernel does not polarize (dominant eigenvalue {0} >= 1)")]
    NotPolarizing(f64),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
