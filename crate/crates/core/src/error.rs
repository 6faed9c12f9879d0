use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e}, tolerance {tolerance:e})")]
    NotPsd { min_eigenvalue: f64, tolerance: f64 },

    #[error("map is not completely positive (Choi min eigenvalue {min_eigenvalue:e})")]
    NotCompletelyPositive { min_eigenvalue: f64 },

    #[error("matrix is singular: {0}")]
    Singular(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("resource cap exceeded: {0}")]
    Resource(String),

    #[error("method not supported: {0}")]
    UnsupportedMethod(String),

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("outside domain: {0}")]
    Domain(String),

    #[error("parse error: {0}")]
    Parse(String),
}
