use std::path::PathBuf;

use thiserror::Error;

/// Failure categories of the command-line front end.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, bad config values or inputs that fail validation.
    #[error("{0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    /// Process exit code: 2 for usage and validation errors, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::Io { .. } | CliError::Runtime(_) => 1,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<ulmsens_core::Error> for CliError {
    fn from(e: ulmsens_core::Error) -> Self {
        // every core error stems from an input the caller can fix
        CliError::Invalid(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
