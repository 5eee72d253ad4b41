use std::path::PathBuf;

use crate::sdf::VolumeCoord;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("rejected depth frame: {0}")]
    InvalidFrame(String),

    #[error("volume {0} is not allocated")]
    VolumeNotFound(VolumeCoord),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown scene `{0}`")]
    UnknownScene(String),

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("{path}: expected schema `{expected}`, found `{found}`")]
    Schema {
        path: PathBuf,
        expected: String,
        found: String,
    },

    #[error("no trajectory entry for frame {index} (timestamp {timestamp})")]
    MissingPose { index: usize, timestamp: f64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.into(),
        }
    }
}
