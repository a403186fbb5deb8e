//! Error type shared across the crate.
//!
//! The CLI maps the variants to exit codes: usage errors exit 1, numerical
//! failures exit 2, validation failures exit 3.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A precondition or configuration problem caused by the caller.
    #[error("usage error: {0}")]
    Usage(String),

    /// A numerical routine did not reach the requested tolerance. The best
    /// available estimate and the tolerance actually achieved are attached.
    #[error("numerical failure: {message} (estimate {estimate}, achieved tolerance {achieved})")]
    Numerical {
        message: String,
        estimate: f64,
        achieved: f64,
    },

    /// A statistical validation run did not meet its acceptance threshold.
    #[error("validation failure: {0}")]
    Validation(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io { path: path.as_ref().display().to_string(), source }
    }

    /// Exit code for the CLI: 1 usage, 2 numerical, 3 validation.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 1,
            Error::Numerical { .. } => 2,
            Error::Validation(_) => 3,
            Error::Io { .. } => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
