use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the clustering engine and its data pipeline.
#[derive(Debug, Error)]
pub enum FairError {
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("label {label} at position {index} is out of range for {k} clusters")]
    LabelOutOfRange { index: usize, label: usize, k: usize },

    #[error("{what} is not a probability vector: {detail}")]
    NotOnSimplex { what: &'static str, detail: String },

    #[error("invalid demographic partition: {0}")]
    InvalidPartition(String),

    #[error("invalid affinity graph: {0}")]
    InvalidGraph(String),

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite energy {value} at outer iteration {outer}")]
    NonFiniteEnergy { outer: usize, value: f64 },

    #[error("unknown profile `{0}`")]
    UnknownProfile(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("missing column `{column}` in {path}")]
    MissingColumn { path: PathBuf, column: String },

    #[error("non-numeric value `{value}` in column `{column}` at data row {row}")]
    NonNumeric {
        column: String,
        row: usize,
        value: String,
    },

    #[error("unmapped sensitive value `{value}` at data row {row}")]
    UnknownGroup { value: String, row: usize },

    #[error("malformed report {path}: {detail}")]
    Report { path: PathBuf, detail: String },
}

pub type Result<T> = std::result::Result<T, FairError>;
