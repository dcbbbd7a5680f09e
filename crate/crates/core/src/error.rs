use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A table row could not be turned into a model object.
    #[error("{table} row {row}: {message}")]
    Load {
        table: String,
        row: usize,
        message: String,
    },

    #[error("no data to summarize: {0}")]
    EmptyStats(String),

    #[error("stretch undefined for co-located endpoints {0} and {1}")]
    UndefinedStretch(String, String),

    #[error("endpoints {0} and {1} are not connected")]
    Disconnected(String, String),

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn load(table: &str, row: usize, msg: impl Into<String>) -> Self {
        Error::Load {
            table: table.to_string(),
            row,
            message: msg.into(),
        }
    }
}
