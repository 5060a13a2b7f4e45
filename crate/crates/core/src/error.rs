use std::io;
use std::path::PathBuf;

use thiserror::Error;

use crate::wordnet::SynsetId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("missing file {}", .0.display())]
    MissingFile(PathBuf),

    #[error("{path}: parse error at byte {offset}: {message}")]
    Parse {
        path: String,
        offset: u64,
        message: String,
    },

    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("unknown synset {0}")]
    UnknownSynset(String),

    #[error("synset {0} has no neighbors; no mass can propagate from it")]
    IsolatedTarget(SynsetId),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("zero vector: {0}")]
    ZeroVector(String),

    #[error("uncomputable: {0}")]
    Uncomputable(String),

    #[error("undefined correlation: {0}")]
    UndefinedCorrelation(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub fn parse(path: impl Into<String>, offset: u64, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            offset,
            message: message.into(),
        }
    }

    /// Process exit code for this error: 2 usage, 3 parse/format,
    /// 4 resource integrity, 5 uncomputable request.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter(_) => 2,
            Error::Parse { .. } => 3,
            Error::MissingFile(_) | Error::Integrity(_) | Error::Io(_) => 4,
            Error::UnknownSynset(_)
            | Error::IsolatedTarget(_)
            | Error::DimensionMismatch { .. }
            | Error::ZeroVector(_)
            | Error::Uncomputable(_)
            | Error::UndefinedCorrelation(_) => 5,
        }
    }
}
