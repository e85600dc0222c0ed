use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied value violates an operation's precondition.
    #[error("invalid input: {0}")]
    Input(String),

    /// Relative density needs at least two vertices.
    #[error("relative density is undefined for a graph with {0} vertices")]
    UndefinedDensity(usize),

    /// Conditioning on an event of probability zero.
    #[error("degenerate conditioning: {0}")]
    DegenerateConditioning(String),

    /// A metric was asked about a candidate set that holds no true reds.
    #[error("the candidate set contains no red vertices")]
    NoRedCandidates,

    /// A topic profile was requested for a subgraph without edges.
    #[error("topic profile of an edgeless subgraph")]
    EmptyProfile,

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("validation error at line {line}: {msg}")]
    Validation { line: usize, msg: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    /// True for errors caused by the file system rather than the data.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
