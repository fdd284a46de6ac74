use std::path::PathBuf;

/// Errors raised anywhere in the solver stack.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid generator: {0}")]
    Generator(String),

    #[error("state vector is not normalized (norm = {0})")]
    NotNormalized(f64),

    #[error("matrix is not Hermitian (max asymmetry {0:e})")]
    NotHermitian(f64),

    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },

    #[error("invalid configuration field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("episode is finished; call reset before stepping")]
    EpisodeDone,

    #[error("action index {index} out of range for pool of size {size}")]
    ActionOutOfRange { index: usize, size: usize },

    #[error("replay buffer holds {have} transitions but {need} were requested")]
    ReplayUnderfilled { have: usize, need: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config { field: field.into(), message: message.into() }
    }

    /// Prefixes the field of a configuration error with its enclosing section.
    pub(crate) fn within(self, section: &str) -> Self {
        match self {
            Error::Config { field, message } => Error::Config { field: format!("{section}.{field}"), message },
            other => other,
        }
    }
}
