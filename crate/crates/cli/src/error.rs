use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Model(#[from] sfiegarch::Error),

    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },

    #[error("configuration: {0}")]
    Config(String),

    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// 2 for invalid inputs, 3 for numerical failures, 1 for I/O problems.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Model(e) if e.is_validation() => 2,
            CliError::Model(sfiegarch::Error::Io(_)) => 1,
            CliError::Model(_) => 3,
            CliError::Config(_) | CliError::Usage(_) => 2,
            CliError::Io { .. } | CliError::Csv(_) => 1,
        }
    }
}
