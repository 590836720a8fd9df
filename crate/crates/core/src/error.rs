use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("quadruple {index}: {what} id {id} out of range (count {count})")]
    IdOutOfRange {
        index: usize,
        what: &'static str,
        id: usize,
        count: usize,
    },

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{}: dangling {what} id {id}", path.display())]
    Dangling {
        path: PathBuf,
        what: &'static str,
        id: usize,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("no training pairs; generate seeds from temporal matching first")]
    EmptySeeds,

    #[error("truth target {0} is not in the candidate pool")]
    TruthNotInPool(usize),

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
