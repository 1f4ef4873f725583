use std::path::PathBuf;

/// Errors produced by every module of the crate.
#[derive(thiserror::Error, Debug)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("index {index} out of range for {len} signals")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("brute-force enumeration refused: {n}x{m} grid exceeds {limit} cells")]
    TooLarge { n: usize, m: usize, limit: usize },

    #[error("layer {layer} ({kind}): {message}")]
    Shape {
        layer: usize,
        kind: String,
        message: String,
    },

    #[error("input length {len} is outside the admissible range {min}..={max}")]
    Inadmissible { len: usize, min: usize, max: usize },

    #[error("cache is stale: produced at parameter generation {cached}, store is at {current}")]
    StaleCache { cached: u64, current: u64 },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("unknown parameter `{0}`")]
    UnknownParam(String),

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("format error in {path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }
}
