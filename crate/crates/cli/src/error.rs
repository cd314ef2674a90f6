use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::fgrd::FgrdError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Core(#[from] persal_core::Error),
    #[error("{}: {source}", path.display())]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{}: {source}", path.display())]
    Grid { path: PathBuf, source: FgrdError },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
}

pub type CliResult<T> = Result<T, CliError>;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_IO: i32 = 2;

impl CliError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        CliError::Invalid(msg.into())
    }

    pub fn io(path: impl AsRef<Path>, source: io::Error) -> Self {
        CliError::Io { path: path.as_ref().to_path_buf(), source }
    }

    pub fn grid(path: impl AsRef<Path>, source: FgrdError) -> Self {
        match source {
            FgrdError::Io(e) => Self::io(path, e),
            source => CliError::Grid { path: path.as_ref().to_path_buf(), source },
        }
    }

    /// Damaged or unreadable files are I/O failures; bad values, configs and
    /// mismatched inputs are validation failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) | CliError::Core(_) | CliError::Json { .. } => EXIT_INVALID,
            CliError::Grid { source: FgrdError::InvalidGrid(_), .. } => EXIT_INVALID,
            CliError::Csv { source, .. } if !source.is_io_error() => EXIT_INVALID,
            CliError::Grid { .. } | CliError::Io { .. } | CliError::Csv { .. } => EXIT_IO,
        }
    }
}
