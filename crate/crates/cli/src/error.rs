use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

pub const EXIT_DEGENERATE: u8 = 2;
pub const EXIT_USAGE: u8 = 64;
pub const EXIT_NO_INPUT: u8 = 66;
pub const EXIT_INTERNAL: u8 = 70;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("missing input: {0}")]
    MissingInput(String),

    #[error("{0}")]
    Degenerate(String),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },

    #[error(transparent)]
    Core(#[from] histolab_core::Error),

    #[error("{0}")]
    Internal(String),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn io(path: &Path, source: io::Error) -> Self {
        if source.kind() == io::ErrorKind::NotFound {
            CliError::MissingInput(path.display().to_string())
        } else {
            CliError::Io {
                path: path.to_path_buf(),
                source,
            }
        }
    }

    pub fn exit_code(&self) -> u8 {
        use histolab_core::Error as E;
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::MissingInput(_) => EXIT_NO_INPUT,
            CliError::Degenerate(_) => EXIT_DEGENERATE,
            CliError::Io { .. } | CliError::Internal(_) => EXIT_INTERNAL,
            CliError::Core(e) => match e {
                E::DegenerateSignal(_) => EXIT_DEGENERATE,
                E::Validation(_) | E::Capacity(_) => EXIT_USAGE,
                E::Io(io) if io.kind() == io::ErrorKind::NotFound => EXIT_NO_INPUT,
                _ => EXIT_INTERNAL,
            },
        }
    }
}
