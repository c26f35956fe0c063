use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the simulator.
#[derive(Debug, Error)]
pub enum Error {
    /// An input lies outside the domain of a physical formula.
    #[error("domain error: {0}")]
    Domain(String),

    /// A configuration value violates an invariant.
    #[error("validation error: {0}")]
    Validation(String),

    /// The configuration text could not be parsed.
    #[error("config parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    /// State, rate table and mode list do not describe the same modes.
    #[error("mode mismatch: {0}")]
    ModeMismatch(String),

    /// Two solver routes disagree on the same problem.
    #[error("solver cross-check failed: {0}")]
    Crosscheck(String),

    /// The resolved configuration could not be written back as text.
    #[error("config emit error: {0}")]
    Emit(String),

    #[error("output directory {0} is locked by another run")]
    Locked(PathBuf),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Validation(msg.into()))
}
