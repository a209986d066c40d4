use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = SkqError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum SkqError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("n-triples parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid triple: {0}")]
    InvalidTriple(String),

    #[error("input contains no triples")]
    EmptyGraph,

    #[error("query syntax error at byte {position}: {message}")]
    QuerySyntax { position: usize, message: String },

    #[error("invalid query: {0}")]
    InvalidQuery(String),

    #[error("unknown vertex id {0}")]
    UnknownVertex(u32),

    #[error("empty keyword phrase {0:?}")]
    EmptyKeyword(String),

    #[error("malformed {what} file: {message}")]
    Format { what: &'static str, message: String },

    #[error("{what} file version {found} is not supported (expected {expected})")]
    Version {
        what: &'static str,
        found: u32,
        expected: u32,
    },

    #[error("index was built for a different graph (fingerprint {found}, graph has {expected})")]
    StaleIndex { found: String, expected: String },

    #[error("exploration state error: {0}")]
    State(String),

    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl SkqError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SkqError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            SkqError::Io { .. }
            | SkqError::Parse { .. }
            | SkqError::InvalidTriple(_)
            | SkqError::EmptyGraph
            | SkqError::QuerySyntax { .. }
            | SkqError::InvalidQuery(_)
            | SkqError::UnknownVertex(_)
            | SkqError::EmptyKeyword(_) => 2,
            SkqError::Format { .. }
            | SkqError::Version { .. }
            | SkqError::StaleIndex { .. }
            | SkqError::State(_) => 3,
            SkqError::Invariant(_) => 4,
        }
    }
}
