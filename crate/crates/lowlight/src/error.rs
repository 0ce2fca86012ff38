use std::path::PathBuf;

/// Errors shared by every module in the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid gamma exponent {0}")]
    InvalidGamma(f64),

    #[error("invalid filter sigma {0} (must be > 0)")]
    InvalidSigma(f64),

    #[error("invalid guided filter config: {0}")]
    InvalidFilterConfig(String),

    #[error("invalid image buffer: {0}")]
    InvalidImage(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("image too small: needs at least {min}x{min} pixels, got {width}x{height}")]
    ImageTooSmall {
        min: usize,
        width: usize,
        height: usize,
    },

    #[error("non-finite sample encountered: {0}")]
    NonFinite(String),

    #[error("invalid parameter bounds: {0}")]
    InvalidBounds(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unknown method '{0}' (expected dichotomy, dichotomy-filter, tuna, or tuna-ycbcr)")]
    UnknownMethod(String),

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error("missing counterpart for '{id}': no file in {side}/")]
    OrphanImage { id: String, side: &'static str },

    #[error("failed to read image {path}: {source}")]
    ImageRead {
        path: PathBuf,
        source: image::ImageError,
    },

    #[error("failed to write image {path}: {source}")]
    ImageWrite {
        path: PathBuf,
        source: image::ImageError,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("failed to parse config: {0}")]
    Toml(#[from] toml::de::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("thread pool error: {0}")]
    ThreadPool(String),
}

pub type Result<T> = std::result::Result<T, Error>;
