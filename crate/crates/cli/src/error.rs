//! Failure classes and their process exit codes.

use hopfield_core::{Error, ErrorClass};
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Malformed or inconsistent configuration, including bad overrides.
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] Error),
    /// Some invariant checks failed.
    #[error("{failed} of {total} validation checks failed")]
    Validation { failed: usize, total: usize },
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn class(&self) -> &'static str {
        match self {
            CliError::Config(_) | CliError::Io(_) => "config",
            CliError::Core(e) => match e.class() {
                ErrorClass::Config => "config",
                ErrorClass::Numeric => "numeric",
                ErrorClass::Truncation => "truncation",
            },
            CliError::Validation { .. } => "numeric",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.class() {
            "config" => 2,
            "truncation" => 4,
            _ => 3,
        }
    }

    /// Report printed on stderr in `--machine` mode.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Report<'a> {
            error: &'a str,
            message: String,
            exit_code: i32,
        }
        serde_json::to_string(&Report {
            error: self.class(),
            message: self.to_string(),
            exit_code: self.exit_code(),
        })
        .expect("report serializes")
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
