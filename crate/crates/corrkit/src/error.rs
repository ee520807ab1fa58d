//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid factorization: {0}")]
    InvalidFactorization(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid operation: {0}")]
    InvalidOperation(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported monotone regime: {0}")]
    UnsupportedRegime(String),

    #[error("total dimension {0} exceeds hard cap {1}")]
    DimensionCap(usize, usize),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for values that signal a monotone cannot evaluate the given
    /// input, as opposed to a malformed input.
    pub fn is_unsupported(&self) -> bool {
        matches!(self, Error::UnsupportedRegime(_))
    }
}
