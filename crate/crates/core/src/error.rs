use std::path::PathBuf;

use crate::geometry::PairConfiguration;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },

    #[error("rejection sampling for {target:?} gave up after {attempts} attempts")]
    SamplingExhausted {
        target: PairConfiguration,
        attempts: usize,
    },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("non-finite loss {loss} at step {step}")]
    NonFiniteLoss { step: usize, loss: f64 },

    #[error("batch has {instances} instance(s); at least 2 are needed for dissimilar pairs")]
    InsufficientBatch { instances: usize },

    #[error("resampling failed: {0}")]
    Resample(String),

    #[error("{}: record {record}: {reason}", file.display())]
    Format {
        file: PathBuf,
        record: usize,
        reason: String,
    },

    #[error("checkpoint {}: {reason}", path.display())]
    Checkpoint { path: PathBuf, reason: String },

    #[error("config: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParam {
            name,
            reason: reason.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
