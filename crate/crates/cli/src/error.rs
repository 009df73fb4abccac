use std::path::{Path, PathBuf};

use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_IO: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    /// Bad content at a known place in an input file.
    #[error("{path}:{location}: {message}")]
    Input {
        path: PathBuf,
        location: String,
        message: String,
    },
    #[error(transparent)]
    Analysis(#[from] geoaccess_core::Error),
    #[error("{0}")]
    Invalid(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } => EXIT_IO,
            _ => EXIT_VALIDATION,
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn input(path: &Path, location: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Input {
            path: path.to_path_buf(),
            location: location.into(),
            message: message.into(),
        }
    }

    pub fn invalid(message: impl Into<String>) -> Self {
        CliError::Invalid(message.into())
    }

    /// Splits csv errors into I/O failures and malformed content.
    pub fn from_csv(path: &Path, err: csv::Error) -> Self {
        let line = err.position().map(|p| p.line());
        match err.into_kind() {
            csv::ErrorKind::Io(e) => CliError::io(path, e),
            other => {
                let location = line.map_or_else(|| "?".to_string(), |l| format!("line {l}"));
                CliError::input(path, location, format!("{other:?}"))
            }
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
