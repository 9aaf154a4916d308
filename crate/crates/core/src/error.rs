use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input violates a model invariant (share sums, caps, lengths, ...).
    #[error("validation: {0}")]
    Validation(String),

    /// A well-formed request that refers to something that does not exist.
    #[error("domain: {0}")]
    Domain(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    /// The request is valid but outside what the chosen engine supports.
    #[error("capability: {0}")]
    Capability(String),

    /// A stored solution misses the guarantee it was checked against.
    #[error("contract: {0}")]
    Contract(String),

    #[error("parse: {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("io: {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by the filesystem rather than the data.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }

    /// Short machine-readable tag, used as the error prefix on the command line.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Validation(_) => "validation",
            Error::Domain(_) => "domain",
            Error::Infeasible(_) => "infeasible",
            Error::Capability(_) => "capability",
            Error::Contract(_) => "contract",
            Error::Parse { .. } => "parse",
            Error::Io { .. } => "io",
        }
    }
}
