use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: only in left {only_left:?}, only in right {only_right:?}")]
    DimensionMismatch {
        only_left: Vec<String>,
        only_right: Vec<String>,
    },

    #[error("invalid comparison: {0}")]
    InvalidComparison(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("system `{system}` has no entry for input `{input}`")]
    UnknownInput { system: String, input: String },

    #[error("adapter `{system}` failed (exit status {status:?}): {diagnostics}")]
    Adapter {
        system: String,
        status: Option<i32>,
        diagnostics: String,
    },

    #[error("ingestion error: {0}")]
    Ingestion(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate variance: every score is identical")]
    DegenerateVariance,

    #[error("method `{metric}` is inadmissible: assumption `{assumption}` does not hold")]
    MethodInadmissible { metric: String, assumption: String },

    #[error("inadmissible variant: {0}")]
    InadmissibleVariant(String),

    #[error("confounded probe: more than one control varies ({0:?})")]
    ConfoundedProbe(Vec<String>),

    #[error("malformed transcript: {0}")]
    MalformedTranscript(String),

    #[error("strengths are inestimable: comparison graph has disconnected components {components:?}")]
    Inestimable { components: Vec<Vec<String>> },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::DimensionMismatch { .. } => 1,
            Error::Ingestion(_) | Error::EmptyInput(_) | Error::Io { .. } | Error::Json(_) => 2,
            _ => 3,
        }
    }
}
