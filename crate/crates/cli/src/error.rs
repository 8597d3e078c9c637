use std::process::ExitCode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },

    #[error("{0}")]
    Invalid(cdst_core::Error),

    #[error("check failed: {0}")]
    Failed(String),
}

impl CliError {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        CliError::Io { path: path.as_ref().display().to_string(), source }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Usage(_) => 2,
            CliError::Io { .. } => 3,
            CliError::Invalid(_) => 4,
            CliError::Failed(_) => 5,
        })
    }
}

impl From<cdst_core::Error> for CliError {
    fn from(e: cdst_core::Error) -> Self {
        match e {
            cdst_core::Error::Io(source) => CliError::Io { path: String::from("<input>"), source },
            other => CliError::Invalid(other),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
