use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the optimizer library.
#[derive(Debug, Error)]
pub enum NovakError {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    Dimension { context: String, expected: usize, actual: usize },

    #[error("non-finite value in {0}")]
    Numeric(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    /// An operation was called in a state that its contract forbids.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("I/O error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed data in {path}: {message}")]
    Parse { path: PathBuf, message: String },
}

pub type Result<T, E = NovakError> = std::result::Result<T, E>;

impl NovakError {
    pub(crate) fn dimension(context: impl Into<String>, expected: usize, actual: usize) -> Self {
        NovakError::Dimension { context: context.into(), expected, actual }
    }

    pub(crate) fn config(message: impl Into<String>) -> Self {
        NovakError::Config(message.into())
    }

    pub(crate) fn contract(message: impl Into<String>) -> Self {
        NovakError::Contract(message.into())
    }
}
