use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("no records parsed from {0}")]
    EmptyDataset(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("rows {first} and {second} have identical features but classes {first_class:?} and {second_class:?}")]
    ContradictoryRows {
        first: usize,
        second: usize,
        first_class: String,
        second_class: String,
    },

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("{file} line {line}: {msg}")]
    Format {
        file: &'static str,
        line: usize,
        msg: String,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
