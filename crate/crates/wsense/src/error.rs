use std::io;
use std::path::PathBuf;

pub type Result<T, E = AppError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    Core(#[from] wsense_core::Error),
    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },
    #[error("{path}: {msg}")]
    Format { path: PathBuf, msg: String },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Usage(String),
    #[error("dataset not found: {0} (pass --data-dir, set WSENSE_DATA_DIR, or use --synthetic)")]
    MissingData(PathBuf),
}

impl AppError {
    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(io::Error) -> AppError {
        let path = path.into();
        move |source| AppError::Io { path, source }
    }

    pub fn format(path: impl Into<PathBuf>, msg: impl Into<String>) -> AppError {
        AppError::Format {
            path: path.into(),
            msg: msg.into(),
        }
    }
}
