use std::path::PathBuf;

use thiserror::Error;

/// Everything that can go wrong inside the engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed CSV in {file}: {message}")]
    Csv { file: String, message: String },

    #[error("{file}: unparseable value {value:?} at row {row}, column {column:?}")]
    Parse {
        file: String,
        row: usize,
        column: String,
        value: String,
    },

    #[error("{file}: missing value at row {row}, column {column:?}")]
    MissingValue {
        file: String,
        row: usize,
        column: String,
    },

    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: String,
        expected: usize,
        found: usize,
    },

    #[error("row identifiers disagree at row {row}: {left:?} vs {right:?}")]
    IdMismatch {
        row: usize,
        left: String,
        right: String,
    },

    #[error("duplicate row identifier {0:?}")]
    DuplicateId(String),

    #[error("need at least {needed} rows, found {found}")]
    TooFewRows { needed: usize, found: usize },

    #[error("clustering must have at least two classes, found {0}")]
    TooFewClasses(usize),

    #[error("class {0:?} has no members")]
    EmptyClass(String),

    #[error("points {a} and {b} coincide (zero distance)")]
    DuplicatePoints { a: usize, b: usize },

    #[error("vertex {0} is not in the tree")]
    UnknownVertex(usize),

    #[error("unknown row id {0:?}")]
    UnknownRow(String),

    #[error("invalid tree: {0}")]
    InvalidTree(String),

    #[error("invalid group selection: {0}")]
    InvalidSelection(String),

    #[error("degenerate group: {0}")]
    DegenerateGroup(String),

    #[error("trees share no bipartitions; the normalized distance is undefined")]
    NoSharedBipartitions,

    #[error("medoid labels differ between the two trees")]
    LabelMismatch,

    #[error("singular system: {0}")]
    Singular(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
