use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("no supervision: ground truth is empty")]
    NoSupervision,

    #[error("degenerate labels in bin dt={bin}: need both positive and negative pairs")]
    DegenerateLabels { bin: usize },

    #[error("no model bin for dt={0}")]
    UnknownBin(usize),

    #[error("instance too large for exhaustive search: {nodes} nodes (max {max})")]
    TooLarge { nodes: usize, max: usize },

    #[error("node {0} has no cluster label")]
    UnlabeledNode(usize),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Short stable identifier used in the CLI's one-line error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid-input",
            Error::Parse { .. } => "parse",
            Error::NoSupervision => "no-supervision",
            Error::DegenerateLabels { .. } => "degenerate-labels",
            Error::UnknownBin(_) => "unknown-bin",
            Error::TooLarge { .. } => "too-large",
            Error::UnlabeledNode(_) => "unlabeled-node",
            Error::Io { .. } => "io",
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
