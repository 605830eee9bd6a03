use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("critical grid too large: {size} evaluations exceed the cap of {cap}")]
    GridTooLarge { size: u128, cap: u128 },

    #[error("transport support too large: {size} atoms exceed the cap of {cap}")]
    SupportTooLarge { size: usize, cap: usize },

    #[error("dimension {dim} exceeds the supported maximum of {max}")]
    DimTooLarge { dim: usize, max: usize },

    #[error("point outside the unit cube: {0}")]
    OutOfDomain(String),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("regime violation: {0}")]
    RegimeViolation(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

pub(crate) fn regime<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::RegimeViolation(msg.into()))
}
