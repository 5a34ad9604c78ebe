//! Process-level error classes; each maps to a documented exit code.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags or paths: exit 1.
    #[error("{0}")]
    User(String),
    /// Unreadable or malformed inputs and artifacts: exit 2.
    #[error("{0}")]
    Data(String),
    /// Training loss left the finite range: exit 3.
    #[error("{0}")]
    Diverged(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::User(_) => 1,
            CliError::Data(_) => 2,
            CliError::Diverged(_) => 3,
        }
    }
}

pub fn user(msg: impl Into<String>) -> CliError {
    CliError::User(msg.into())
}

pub fn data(msg: impl Into<String>) -> CliError {
    CliError::Data(msg.into())
}
