//! Crate-wide error type.
//!
//! `Invalid` marks a violated parameter invariant (CLI exit code 1);
//! everything else is a runtime failure (exit code 2).

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter failed its declared invariant. The message names the
    /// invariant so the CLI can emit a machine-parseable diagnostic.
    #[error("invalid-parameter: {0}")]
    Invalid(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("format: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    /// CLI exit code for this error: 1 for validation, 2 for runtime.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Invalid(_) => 1,
            _ => 2,
        }
    }
}
