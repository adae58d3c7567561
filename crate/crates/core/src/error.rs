use std::path::PathBuf;

/// Errors produced anywhere in the forecasting pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid window: {0}")]
    InvalidWindow(String),

    #[error("{path}: line {line}: {message}")]
    Ingestion {
        path: String,
        line: u64,
        message: String,
    },

    #[error("duplicate record for store {store_id}, item {item_id} on {date}")]
    DuplicateRecord {
        store_id: u32,
        item_id: u64,
        date: chrono::NaiveDate,
    },

    #[error("{path}: schema error: {message}")]
    Schema { path: String, message: String },

    #[error("training diverged: {0}")]
    Divergence(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: malformed file: {message}")]
    Format { path: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
