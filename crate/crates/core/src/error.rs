use thiserror::Error;

/// Errors raised by networks, environments, agents and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("input shape mismatch: expected {expected}, got {got}")]
    InputShape { expected: usize, got: usize },

    #[error("structural mismatch: {0}")]
    Structure(String),

    #[error("invalid state: {0}")]
    State(String),

    #[error("invalid action: {0}")]
    InvalidAction(String),

    #[error("phase order violated: {0}")]
    PhaseOrder(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("statistical test undefined: {0}")]
    UndefinedTest(String),

    #[error("run {run}: {source}")]
    Run {
        run: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// True for errors caused by user-supplied configuration rather than runtime failure.
    pub fn is_config_error(&self) -> bool {
        match self {
            Error::Config(_) | Error::Argument(_) | Error::Json(_) => true,
            Error::Run { source, .. } => source.is_config_error(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
