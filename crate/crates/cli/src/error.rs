use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("numerical divergence: {0}")]
    Divergence(String),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{0} check(s) failed")]
    ChecksFailed(usize),
    #[error("{0}")]
    Solver(grainflow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::ChecksFailed(_) | CliError::Solver(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Divergence(_) => 3,
            CliError::Io { .. } => 4,
        }
    }

    pub fn io(path: impl Into<PathBuf>, err: impl std::fmt::Display) -> Self {
        CliError::Io {
            path: path.into(),
            message: err.to_string(),
        }
    }
}

impl From<grainflow::Error> for CliError {
    fn from(err: grainflow::Error) -> Self {
        use grainflow::Error as E;
        match err {
            E::Divergence { .. } | E::CflViolation { .. } => CliError::Divergence(err.to_string()),
            E::Config(msg) => CliError::Usage(msg),
            other => CliError::Solver(other),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
