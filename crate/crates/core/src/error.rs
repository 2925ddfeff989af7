use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Everything that can go wrong in the toolkit.
///
/// Variants are grouped so a front end can map them onto exit codes:
/// schema/parse/validation/io problems are data errors, domain and
/// numeric failures are numeric errors, the rest are usage errors.
#[derive(Debug, Error)]
pub enum Error {
    #[error("schema error: {message} (column `{column}`)")]
    Schema { column: String, message: String },

    #[error("parse error at row {row}, column `{column}`: cannot read `{value}` as a number")]
    Parse {
        row: usize,
        column: String,
        value: String,
    },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("numeric error in hidden node {node}: {message}")]
    Numeric { node: usize, message: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("model format error: {0}")]
    ModelFormat(String),

    #[error("unknown model format version `{0}`")]
    UnknownVersion(String),

    #[error("design matrix is rank deficient: {0}")]
    RankDeficient(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Coarse classification used by command-line front ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Data,
    Numeric,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Schema { .. }
            | Error::Parse { .. }
            | Error::Validation(_)
            | Error::ModelFormat(_)
            | Error::UnknownVersion(_)
            | Error::Io { .. }
            | Error::Csv(_) => ErrorKind::Data,
            Error::Domain(_) | Error::Numeric { .. } | Error::RankDeficient(_) => {
                ErrorKind::Numeric
            }
            Error::InvalidArgument(_) => ErrorKind::Usage,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
