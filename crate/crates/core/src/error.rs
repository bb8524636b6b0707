//! Error type shared by every module in the crate.

use std::path::PathBuf;
use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A text input could not be parsed. `line` is 1-based.
    #[error("parse error in {path} line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    /// Data violated an invariant (non-finite sample, unsorted peaks, ...).
    #[error("invalid data: {0}")]
    Validation(String),

    /// A configuration value or combination of values is unusable.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A frequency search range contains no spectrum bins.
    #[error("no spectrum bins inside [{low_hz:.6}, {high_hz:.6}] Hz")]
    EmptyBand { low_hz: f64, high_hz: f64 },

    /// Estimate and reference series could not be paired frame by frame.
    #[error("pairing failed: {0}")]
    Pairing(String),

    /// A statistic is undefined for the given data, with the reason.
    #[error("statistic undefined: {0}")]
    Undefined(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Helper for parse failures so call sites stay short.
    pub(crate) fn parse(path: &std::path::Path, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.to_path_buf(),
            line,
            message: message.into(),
        }
    }
}
