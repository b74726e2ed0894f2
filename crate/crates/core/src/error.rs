use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HutError {
    /// Parameters that cannot be applied to the data (bad ε, k larger than the batch, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// Input data violating the dataset invariants.
    #[error("data error: {0}")]
    Data(String),

    /// A caller broke an operation's precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("unknown record id `{0}`")]
    UnknownId(String),

    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error at {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl HutError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HutError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        HutError::Csv {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, HutError>;
