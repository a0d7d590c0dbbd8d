use std::path::PathBuf;

use nirfuse::FusionError;
use thiserror::Error;

/// Process exit codes.
pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_IO: u8 = 3;
pub const EXIT_DIMENSIONS: u8 = 4;

#[derive(Error, Debug)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: unsupported or unreadable image: {message}", path.display())]
    Format { path: PathBuf, message: String },
    #[error("{}: dimension mismatch: {vis:?} visible vs {nir:?} NIR", path.display())]
    Dimensions {
        path: PathBuf,
        vis: (usize, usize),
        nir: (usize, usize),
    },
    #[error(transparent)]
    Fusion(#[from] FusionError),
    #[error("{0}")]
    Usage(String),
    #[error("all {count} pairs failed; first error: {first}")]
    AllFailed { count: usize, first: Box<CliError> },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } | CliError::Format { .. } => EXIT_IO,
            CliError::Dimensions { .. } => EXIT_DIMENSIONS,
            CliError::Fusion(FusionError::DimensionMismatch { .. }) => EXIT_DIMENSIONS,
            CliError::Fusion(_) | CliError::Usage(_) => EXIT_USAGE,
            CliError::AllFailed { first, .. } => first.exit_code(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
