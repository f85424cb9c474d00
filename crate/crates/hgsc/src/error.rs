//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("ply format error: {0}")]
    PlyFormat(String),

    #[error("ply data error at primitive {index}: {msg}")]
    PlyData { index: usize, msg: String },

    #[error("camera rig error: {0}")]
    CameraRig(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("scoring error: {0}")]
    Scoring(String),

    #[error("decode error at byte {offset}: {msg}")]
    Decode { offset: usize, msg: String },

    #[error("corrupt {section} section: {msg}")]
    CorruptStream { section: String, msg: String },

    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("rd curves have no overlapping quality range")]
    NoOverlap,
}

impl Error {
    pub fn decode(offset: usize, msg: impl Into<String>) -> Self {
        Error::Decode {
            offset,
            msg: msg.into(),
        }
    }

    pub fn corrupt(section: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::CorruptStream {
            section: section.into(),
            msg: msg.into(),
        }
    }

    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}
