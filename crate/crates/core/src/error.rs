use std::path::PathBuf;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("empty sequence: {0}")]
    EmptySequence(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("unsupported format version: {0}")]
    Version(String),

    #[error("truncated payload: {0}")]
    Truncated(String),

    #[error("unknown tensor `{0}`")]
    UnknownTensor(String),

    #[error("missing tensor `{0}`")]
    MissingTensor(String),

    #[error("training diverged: {0}")]
    Diverged(String),

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("gradient check failed: {0}")]
    GradientMismatch(String),

    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("I/O error for subject `{subject}` at {path}: {source}")]
    SubjectFile {
        subject: String,
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("JSON error at {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("CSV error at {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    /// Short machine-readable tag, used by the CLI's error line.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidConfig(_) => "invalid_config",
            Error::Dimension(_) => "dimension",
            Error::EmptySequence(_) => "empty_sequence",
            Error::NonFinite(_) => "non_finite",
            Error::Schema(_) => "schema",
            Error::Version(_) => "version",
            Error::Truncated(_) => "truncated",
            Error::UnknownTensor(_) => "unknown_tensor",
            Error::MissingTensor(_) => "missing_tensor",
            Error::Diverged(_) => "diverged",
            Error::UndefinedMetric(_) => "undefined_metric",
            Error::GradientMismatch(_) => "gradient_mismatch",
            Error::Io { .. } | Error::SubjectFile { .. } => "io",
            Error::Json { .. } => "json",
            Error::Csv { .. } => "csv",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
