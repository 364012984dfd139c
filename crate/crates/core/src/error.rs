use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Malformed or inconsistent configuration (grids, dt, presets, ids).
    #[error("configuration error: {0}")]
    Config(String),
    /// Input outside the mathematical domain of an operation (m < n, ρ ≤ 0, t ≤ 0, ...).
    #[error("domain error: {0}")]
    Domain(String),
    /// Non-finite values or other numerical breakdown.
    #[error("numeric error: {0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
