use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("invalid similarity matrix: row {row} has non-positive sum {sum}")]
    InvalidSimilarity { row: usize, sum: f64 },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("eigenvalue {lambda} is too close to 1 for the eigenfunction extension")]
    EigenvalueOne { lambda: f64 },

    #[error("corrupted sample is empty")]
    EmptySample,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("no Monte Carlo samples accumulated")]
    NoSamples,

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },

    #[error("column {column} is constant and cannot be normalized")]
    DegenerateColumn { column: usize },

    #[error("sample {sample} at epsilon {epsilon}: {source}")]
    Sample {
        sample: u64,
        epsilon: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

/// Process exit classes used by the command line tool.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Data,
    Numeric,
}

impl ErrorClass {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Config => 2,
            ErrorClass::Data => 3,
            ErrorClass::Numeric => 4,
        }
    }
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidConfig(_) | Error::Json { .. } => ErrorClass::Config,
            Error::Numeric(_) | Error::EigenvalueOne { .. } | Error::InvalidSimilarity { .. } => {
                ErrorClass::Numeric
            }
            Error::Sample { source, .. } => source.class(),
            _ => ErrorClass::Data,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
