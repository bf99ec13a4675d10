use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{0}")]
    Data(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] aklt_core::Error),

    #[error("{0} of {1} comparisons failed")]
    Comparison(usize, usize),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> u8 {
        use aklt_core::Error as E;
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(
                E::ChainLength(..) | E::ParameterRange { .. } | E::ProgramTooLong { .. },
            ) => 2,
            CliError::Data(_) | CliError::Io { .. } | CliError::Core(_) => 3,
            CliError::Comparison(..) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
