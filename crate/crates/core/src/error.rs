use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum FusionError {
    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("plane data length {len} does not match {width}x{height}")]
    BadLength {
        width: usize,
        height: usize,
        len: usize,
    },
}

pub type Result<T> = std::result::Result<T, FusionError>;
