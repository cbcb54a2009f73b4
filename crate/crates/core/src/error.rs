use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read or write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("failed to parse {what}: {source}")]
    Parse {
        what: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("invalid scene at `{field}`: {message}")]
    InvalidScene { field: String, message: String },

    #[error("states come from different scenes ({left} vs {right} objects)")]
    ObjectCountMismatch { left: usize, right: usize },

    #[error("expected {expected} states for {controls} controls, got {actual}")]
    LengthMismatch {
        controls: usize,
        expected: usize,
        actual: usize,
    },

    #[error("cannot select from an empty cost list")]
    EmptyCosts,

    #[error("scene generation failed: {0}")]
    SceneGeneration(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("csv output failed: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::InvalidScene {
            field: field.into(),
            message: message.into(),
        }
    }
}
