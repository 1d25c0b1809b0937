use thiserror::Error;

/// Errors raised by the algebraic routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("rank deficiency: {0}")]
    Rank(String),
    #[error("type error: {0}")]
    Type(String),
    #[error("precondition not met: {0}")]
    Precondition(String),
    #[error("structure error: {0}")]
    Structure(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("claim violated: {claim} (residual {residual:.3e})")]
    ClaimViolation { claim: String, residual: f64 },
    #[error("certification failed on {term} (residual {residual:.3e})")]
    Certification { term: String, residual: f64 },
    #[error("format error at line {line}, column {column}: {message}")]
    Format {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("validation error in field `{field}`: {message}")]
    Validation { field: String, message: String },
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
