use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A value violates a documented domain invariant.
    #[error("invalid {what}: {reason}")]
    Invalid { what: &'static str, reason: String },

    /// A structured input could not be parsed; `row` is 1-based and counts the header.
    #[error("{source_name}, row {row}: {reason}")]
    Parse {
        source_name: String,
        row: usize,
        reason: String,
    },

    #[error("configuration: {0}")]
    Config(String),

    #[error("power kernel is singular at zero distance (cell {cell}, knot {knot})")]
    KernelSingularity { cell: usize, knot: usize },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("singular design matrix")]
    SingularDesign,

    #[error("sampler failed: {0}")]
    SamplerFailed(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(what: &'static str, reason: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-parsable category used by the CLI.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Invalid { .. } => "invalid",
            Error::Parse { .. } => "parse",
            Error::Config(_) => "config",
            Error::KernelSingularity { .. } => "kernel",
            Error::NonFinite(_) => "non-finite",
            Error::SingularDesign => "singular-design",
            Error::SamplerFailed(_) => "sampler",
            Error::Io { .. } => "io",
        }
    }
}
