use thiserror::Error;

/// Errors raised by the library. Oracle findings are reported, never thrown.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum NgbError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("cutoff too small: tail mass {tail:.3e} exceeds {tol:.1e} at dim {dim}")]
    CutoffTooSmall { dim: usize, tail: f64, tol: f64 },

    #[error("unsupported range: {0}")]
    UnsupportedRange(String),

    #[error("grid under-resolved: estimated quadrature error {estimate:.3e} > {tol:.1e}")]
    GridUnderresolved { estimate: f64, tol: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("degenerate parameters: {0}")]
    Degenerate(String),

    #[error("infeasible region: {0}")]
    Infeasible(String),

    #[error("inconsistency: {0}")]
    Inconsistency(String),

    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, NgbError>;

impl From<std::io::Error> for NgbError {
    fn from(e: std::io::Error) -> Self {
        NgbError::Io(e.to_string())
    }
}

impl From<csv::Error> for NgbError {
    fn from(e: csv::Error) -> Self {
        NgbError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for NgbError {
    fn from(e: serde_json::Error) -> Self {
        NgbError::Io(e.to_string())
    }
}
