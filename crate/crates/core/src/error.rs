use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid keypoint ({x}, {y}): {reason}")]
    InvalidKeypoint { x: usize, y: usize, reason: String },

    #[error("configuration of filter '{name}' failed: {reason}")]
    ConfigurationFailed { name: String, reason: String },

    #[error("corrupt filter '{0}': prototype response is zero")]
    CorruptFilter(String),

    #[error("invalid sequence: {0}")]
    InvalidSequence(String),

    #[error("{path}: parse error: {message}")]
    Parse { path: String, message: String },

    #[error("{path}: unsupported filter-bank version {found} (expected {expected})")]
    Version { path: String, found: u64, expected: u64 },

    #[error("{path}: invariant violated: {message}")]
    Invariant { path: String, message: String },

    #[error("{}: unsupported image format (expected PNG or JPEG)", path.display())]
    UnsupportedFormat { path: PathBuf },

    #[error("{}: {source}", path.display())]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
