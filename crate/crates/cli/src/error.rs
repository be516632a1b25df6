use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] bcreg_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: row {row}, column {column}: cannot parse {cell:?} as a finite number")]
    Parse {
        path: PathBuf,
        row: usize,
        column: usize,
        cell: String,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("{path}: no data rows after the header")]
    Empty { path: PathBuf },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("serialization failed: {0}")]
    Serialize(String),
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
