use std::path::PathBuf;

/// Errors produced by the core library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("value out of domain: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid master key: {0}")]
    InvalidKey(String),

    #[error("watermark does not fit on the {axis} axis: need {needed}, have {available}")]
    Capacity {
        axis: &'static str,
        needed: usize,
        available: usize,
    },

    #[error("extraction failed: {0}")]
    Extraction(String),

    #[error("payload too large: {len} bytes")]
    PayloadTooLarge { len: usize },

    #[error("no decodable QR symbol: {0}")]
    QrDecode(String),

    #[error("too many symbol errors to correct")]
    Uncorrectable,

    #[error("framing error: {0}")]
    Framing(String),

    #[error("malformed signature: {0}")]
    Signature(String),

    #[error("invalid record: {0}")]
    InvalidRecord(String),

    #[error("record {0} already exists")]
    Duplicate(String),

    #[error("record {0} not found")]
    NotFound(String),

    #[error("corrupt record {path}: {reason}")]
    Corrupt { path: PathBuf, reason: String },

    #[error("unsupported store format version {0}")]
    StoreVersion(String),

    #[error("image codec error: {0}")]
    Codec(#[from] image::ImageError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
