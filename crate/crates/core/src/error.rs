use std::io;

use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("block exceeds image: {az}x{rg} block on {width}x{height} image")]
    BlockExceedsImage {
        az: usize,
        rg: usize,
        width: usize,
        height: usize,
    },
    #[error("invalid covariance for class {class}: {reason}")]
    InvalidCovariance { class: usize, reason: String },
    #[error("inconsistent planes: {0}")]
    InconsistentPlanes(String),
    #[error("degenerate filter: empty offset set")]
    DegenerateFilter,
    #[error("shape mismatch: expected {expected:?}, got {actual:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("malformed file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
