use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the encoder, the network, the explainer and the data layer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("index out of range: {0}")]
    OutOfRange(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("degenerate normalization range: min = max = {0}")]
    DegenerateRange(f64),

    #[error("batch norm in training mode needs at least 2 samples, got {0}")]
    DegenerateBatch(usize),

    #[error("strides {strides:?} collapse a feature map of the {rows}x{cols} input")]
    StrideCollapse {
        strides: [usize; 3],
        rows: usize,
        cols: usize,
    },

    #[error("invalid class {class} for a {classes}-class model")]
    InvalidClass { class: usize, classes: usize },

    #[error("empty dataset: {0}")]
    EmptyDataset(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("{path}:{line}: ragged row of length {found}, expected {expected}")]
    RaggedRow {
        path: PathBuf,
        line: usize,
        found: usize,
        expected: usize,
    },

    #[error("malformed file {path}: {msg}")]
    Format { path: PathBuf, msg: String },

    /// A caller-named file could not be read.
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by caller input rather than by the environment.
    pub fn is_contract_violation(&self) -> bool {
        !matches!(self, Error::Io(_))
    }
}

/// Reads a caller-named file, keeping its path in the error.
pub fn read_file(path: &std::path::Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|source| Error::File {
        path: path.to_owned(),
        source,
    })
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
