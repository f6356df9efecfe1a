//! CLI error classification: validation failures exit with code 1,
//! runtime failures with code 2.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad configuration or arguments, detected before real work starts.
    #[error("{0}")]
    Validation(String),

    /// A failure while running: I/O, training divergence, bad data files.
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }

    /// Adds method/seed context to a harness failure.
    pub fn with_context(self, context: &str) -> Self {
        match self {
            CliError::Validation(msg) => CliError::Validation(format!("{context}: {msg}")),
            CliError::Runtime(msg) => CliError::Runtime(format!("{context}: {msg}")),
        }
    }
}

impl From<disent_core::Error> for CliError {
    fn from(err: disent_core::Error) -> Self {
        match err {
            disent_core::Error::InvalidConfig(msg) => CliError::Validation(msg),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Runtime(err.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(err: serde_json::Error) -> Self {
        CliError::Runtime(err.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(err: csv::Error) -> Self {
        CliError::Runtime(err.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
