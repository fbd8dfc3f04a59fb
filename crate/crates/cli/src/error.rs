use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read config {path}: {source}")]
    ConfigRead { path: PathBuf, source: std::io::Error },

    #[error("invalid config {path}: {source}")]
    Config { path: PathBuf, source: cogpower_core::Error },

    #[error("{0}")]
    Usage(String),

    #[error("cannot read policy {path}: {reason}")]
    Policy { path: PathBuf, reason: String },

    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{0}")]
    Solve(cogpower_core::Error),

    #[error("solver did not converge: {0}")]
    NotConverged(String),

    #[error("scenario mismatch: {0}")]
    ScenarioMismatch(String),

    #[error("{0}")]
    Mismatch(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::ConfigRead { .. } | CliError::Config { .. } | CliError::Usage(_) | CliError::Policy { .. } => 2,
            CliError::Io { .. } => 3,
            CliError::Solve(_) | CliError::NotConverged(_) => 4,
            CliError::ScenarioMismatch(_) | CliError::Mismatch(_) => 5,
        }
    }
}

impl From<cogpower_core::Error> for CliError {
    fn from(e: cogpower_core::Error) -> Self {
        match e {
            cogpower_core::Error::Mismatch(msg) => CliError::Mismatch(format!("dimension mismatch: {msg}")),
            other => CliError::Solve(other),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
