use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = LakeError> = std::result::Result<T, E>;

/// Errors surfaced by the lake engine.
///
/// The variants are coarse on purpose: the REST layer maps them onto status
/// codes (`NotFound` → 404, `Invalid*`/`Kind` → 422, `BadRequest` → 400).
#[derive(Debug, Error)]
pub enum LakeError {
    #[error("{what} not found: {id}")]
    NotFound { what: &'static str, id: String },

    #[error("duplicate {what}: {id}")]
    Duplicate { what: &'static str, id: String },

    #[error("wrong object kind for {op}: expected {expected}, found {found}")]
    Kind {
        op: &'static str,
        expected: &'static str,
        found: &'static str,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    /// The lake is being written by an ingest run.
    #[error("lake busy: {0}")]
    Busy(String),

    #[error("SQL syntax error at position {pos}: {msg}")]
    SqlSyntax { pos: usize, msg: String },

    #[error("SQL validation error: {0}")]
    SqlValidation(String),

    #[error("type error: {0}")]
    Type(String),

    #[error("CSV error: {0}")]
    Csv(String),

    #[error("corrupt store {path}: {msg}")]
    Corrupt { path: PathBuf, msg: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl LakeError {
    pub fn not_found(what: &'static str, id: impl ToString) -> Self {
        LakeError::NotFound {
            what,
            id: id.to_string(),
        }
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        LakeError::InvalidArgument(msg.into())
    }

    pub fn precondition(msg: impl Into<String>) -> Self {
        LakeError::Precondition(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LakeError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn corrupt(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        LakeError::Corrupt {
            path: path.into(),
            msg: msg.into(),
        }
    }
}

/// Attaches a path to `std::io::Error`s.
pub(crate) trait IoContext<T> {
    fn at(self, path: impl Into<PathBuf>) -> Result<T>;
}

impl<T> IoContext<T> for std::io::Result<T> {
    fn at(self, path: impl Into<PathBuf>) -> Result<T> {
        self.map_err(|e| LakeError::io(path, e))
    }
}
