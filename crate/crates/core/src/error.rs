use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the hashing pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {message}")]
    Format {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}:{line}: invalid persistence point ({birth}, {death}): death must exceed birth and both must be finite")]
    InvalidPoint {
        path: PathBuf,
        line: usize,
        birth: f64,
        death: f64,
    },

    #[error("degenerate coordinate range: {0}")]
    DegenerateRange(String),

    #[error("coordinate {value} outside [0, 1]")]
    OutOfRange { value: f64 },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("zero-mass histogram cannot be transported")]
    ZeroMass,

    #[error("pair ({i}, {j}): {source}")]
    Pair {
        i: usize,
        j: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("training diverged at epoch {epoch}, batch {batch}: sim={sim} dia={dia} adv={adv}")]
    Diverged {
        epoch: usize,
        batch: usize,
        sim: f64,
        dia: f64,
        adv: f64,
    },

    #[error("unsupported model format version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("model file checksum mismatch or truncated file")]
    Checksum,

    #[error("corrupt model file: {0}")]
    Corrupt(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn at_pair(self, i: usize, j: usize) -> Self {
        Error::Pair {
            i,
            j,
            source: Box::new(self),
        }
    }
}
