use thiserror::Error;

/// Errors raised by the statistics routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("mode enumeration exceeds limit of {limit} entries (max_energy = {max_energy})")]
    TooManyModes { limit: usize, max_energy: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("no root in bracket: {0}")]
    Range(String),

    #[error("spectral cutoff too small: captured fraction {achieved:.3e} is below required {required:.3e}")]
    CutoffTooSmall { achieved: f64, required: f64 },

    #[error("grid extent too small: no half-maximum crossing within +/-{extent}")]
    ExtentTooSmall { extent: f64 },

    #[error("domain error: {0}")]
    Domain(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
