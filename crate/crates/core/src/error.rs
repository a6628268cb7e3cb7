use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed manifest {path}: {reason}")]
    Manifest { path: PathBuf, reason: String },

    #[error("sample count mismatch: view {view} has {found} samples, expected {expected}")]
    SampleCountMismatch { view: usize, expected: usize, found: usize },

    #[error("non-numeric cell {value:?} in {path} at row {row}, column {column}")]
    NonNumeric { path: PathBuf, row: usize, column: usize, value: String },

    #[error("empty view: {0}")]
    EmptyView(String),

    #[error("ragged table {path}: row {row} has {found} columns, expected {expected}")]
    Ragged { path: PathBuf, row: usize, expected: usize, found: usize },

    #[error("non-finite entry in view {view}")]
    NonFinite { view: usize },

    #[error("label count {found} does not match sample count {expected}")]
    LabelCount { expected: usize, found: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is not positive semi-definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("matrix is not symmetric (asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("simplex QP did not converge after {iterations} iterations (residual {residual:e})")]
    QpNotConverged { iterations: usize, residual: f64 },

    #[error("view {view}, row {row}: {source}")]
    RowQp {
        view: usize,
        row: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(
        "rank target unreachable: wanted {target} components, last count {last_count} \
         at gamma {gamma:e} after {iterations} inner iterations"
    )]
    RankUnreachable { target: usize, last_count: usize, gamma: f64, iterations: usize },

    #[error("consensus graph has {found} sample-bearing components, expected {expected}")]
    ComponentMismatch { expected: usize, found: usize },

    #[error("invalid config: {0}")]
    InvalidConfig(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
