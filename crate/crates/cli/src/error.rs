use std::path::{Path, PathBuf};

use thiserror::Error;

/// Failures of a CLI command, grouped by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("{}: {message}", path.display())]
    Io { path: PathBuf, message: String },

    #[error(transparent)]
    Domain(#[from] lambda_field::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 3,
            CliError::Io { .. } => 4,
            CliError::Domain(_) => 5,
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        CliError::Config(message.into())
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

/// Attaches `path` to file-level failures; everything else stays a domain
/// error.
pub(crate) fn at(path: &Path) -> impl FnOnce(lambda_field::Error) -> CliError + '_ {
    move |e| match e {
        lambda_field::Error::Io(_) | lambda_field::Error::Csv(_) | lambda_field::Error::Parse { .. } => CliError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        },
        other => CliError::Domain(other),
    }
}

pub(crate) fn io_at(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| CliError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}
