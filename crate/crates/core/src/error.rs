use std::path::PathBuf;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid primitive: {0}")]
    InvalidPrimitive(String),
    #[error("invalid camera: {0}")]
    InvalidCamera(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),
    #[error("resolution mismatch: {0}x{1} vs {2}x{3}")]
    ResolutionMismatch(u32, u32, u32, u32),
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("unsupported camera model {0} (only PINHOLE and SIMPLE_PINHOLE are supported)")]
    UnsupportedCameraModel(String),
    #[error("{0}: file not found")]
    MissingFile(PathBuf),
    #[error("model format version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("truncated file: {0}")]
    Truncated(String),
    #[error("bad file format: {0}")]
    Format(String),
    #[error("training diverged at iteration {iteration}: {message}")]
    Divergence { iteration: u64, message: String },
    #[error("image error: {0}")]
    Image(#[from] image::ImageError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.into(),
        }
    }
}
