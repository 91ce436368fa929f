use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("invalid parameter `{name}`: {value} ({reason})")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("dataset assembly failed at (part {part}, layer {layer}): {reason}")]
    Assembly { part: u32, layer: u32, reason: String },

    #[error("split failed: {0}")]
    Split(String),

    #[error("layer {layer} outside 1..={max}")]
    LayerOutOfRange { layer: u32, max: u32 },

    #[error("malformed tensor file: {0}")]
    Format(String),

    #[error("manifest error: {0}")]
    Manifest(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("JSON error on {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl CoreError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CoreError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        CoreError::Json {
            path: path.into(),
            source,
        }
    }
}
