use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("file not found: {0}")]
    MissingFile(PathBuf),

    #[error("malformed row in {path} at line {line}: {reason}")]
    MalformedRow {
        path: PathBuf,
        line: u64,
        reason: String,
    },

    #[error("invalid manifest {path}: {reason}")]
    Manifest { path: PathBuf, reason: String },

    #[error("unknown unit `{unit}` for {sensor}")]
    UnknownUnit { unit: String, sensor: String },

    #[error("unknown {what}: `{value}`")]
    Unknown { what: &'static str, value: String },

    #[error("empty stream: {0}")]
    EmptyStream(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("series too short: {0}")]
    TooShort(String),

    #[error("no plausible beats")]
    NoPlausibleBeats,

    #[error("insufficient data: {0}")]
    Insufficient(String),

    #[error("model error: {0}")]
    Model(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable tag, used by the CLI's one-line error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::MissingFile(_) => "missing_file",
            Error::MalformedRow { .. } => "malformed_row",
            Error::Manifest { .. } => "manifest",
            Error::UnknownUnit { .. } => "unknown_unit",
            Error::Unknown { .. } => "unknown",
            Error::EmptyStream(_) => "empty_stream",
            Error::InvalidInput(_) => "invalid_input",
            Error::TooShort(_) => "too_short",
            Error::NoPlausibleBeats => "no_plausible_beats",
            Error::Insufficient(_) => "insufficient",
            Error::Model(_) => "model",
        }
    }
}
