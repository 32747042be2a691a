use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("{name} = {value} is outside the valid range {range}")]
    OutOfRange {
        name: &'static str,
        value: String,
        range: String,
    },

    #[error("covariance of view {view} is singular and no ridge was requested")]
    RankDeficient { view: usize },

    #[error("need at least {required} samples, got {found}")]
    TooFewSamples { required: usize, found: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("matrix contains a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("unknown part-of-speech tag `{0}`")]
    UnknownTag(String),

    #[error("no embedding for key `{key}`")]
    MissingEmbedding { key: String },

    #[error("embedding file format error: {0}")]
    Format(String),

    #[error("{path}:{line}: {cause}")]
    Parse {
        path: PathBuf,
        line: usize,
        cause: String,
    },

    #[error("{path}:{line}: invalid field `{field}`: {message}")]
    Validation {
        path: PathBuf,
        line: usize,
        field: &'static str,
        message: String,
    },

    #[error("{0}")]
    Invalid(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn out_of_range(
        name: &'static str,
        value: impl ToString,
        range: impl ToString,
    ) -> Self {
        Error::OutOfRange {
            name,
            value: value.to_string(),
            range: range.to_string(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
