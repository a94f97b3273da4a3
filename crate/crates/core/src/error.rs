use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid modulation: {0}")]
    InvalidModulation(String),

    #[error("bit sequence of length {len} is not a multiple of {bits_per_symbol}")]
    Framing { len: usize, bits_per_symbol: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error in `{key}`: {msg}")]
    Config { key: String, msg: String },

    #[error("degenerate channel: {0}")]
    DegenerateChannel(String),

    #[error("equalizer singular: {0}")]
    EqualizerSingular(&'static str),

    #[error("training set misses common class {common} with private corner {corner}")]
    InsufficientCoverage { common: usize, corner: usize },

    #[error("extensive pattern would need {0} symbols per block")]
    PatternTooLarge(u128),

    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },

    #[error("empty {0}")]
    Empty(&'static str),

    #[error("receiver used before training")]
    Untrained,

    #[error("malformed network file: {0}")]
    Format(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            msg: msg.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
