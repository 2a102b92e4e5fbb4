use std::path::PathBuf;

/// Errors produced anywhere in the engine.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed file at byte {offset}: {message}")]
    Format { offset: u64, message: String },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("empty matrix: {0}")]
    EmptyMatrix(String),
    #[error("solver did not converge after {iterations} iterations (duality gap {gap:.3e})")]
    NoConvergence { iterations: usize, gap: f64 },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
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

    pub(crate) fn format(offset: u64, message: impl Into<String>) -> Self {
        Error::Format {
            offset,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

macro_rules! bail_arg {
    ($($arg:tt)*) => {
        return Err($crate::error::Error::Argument(format!($($arg)*)))
    };
}
pub(crate) use bail_arg;
