use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected d={expected}, got d={got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("size mismatch: expected k={expected}, got k={got}")]
    SizeMismatch { expected: usize, got: usize },

    #[error("total weight mismatch: {left} vs {right}")]
    WeightMismatch { left: u64, right: u64 },

    #[error("total weight must be positive")]
    ZeroTotalWeight,

    #[error("non-finite coordinate at point {point}, axis {axis}")]
    NonFinite { point: usize, axis: usize },

    #[error("pattern is {found}, operation needs {needed} points")]
    Weightedness { needed: &'static str, found: &'static str },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("brute-force matching is limited to k <= {max}, got k={k}")]
    TooLarge { k: usize, max: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("metric {metric} is not supported here: {reason}")]
    UnsupportedMetric { metric: &'static str, reason: &'static str },

    #[error("coreset fingerprint {found} does not match instance {expected}")]
    FingerprintMismatch { expected: String, found: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("malformed data: {0}")]
    Data(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }

    /// Process exit code used by the CLI: 2 config, 3 data, 4 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter { .. } | Error::Config(_) | Error::UnsupportedMetric { .. } => 2,
            Error::Numerical(_) => 4,
            _ => 3,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Data(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Data(e.to_string())
    }
}
