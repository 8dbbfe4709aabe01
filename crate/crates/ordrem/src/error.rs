use thiserror::Error;

/// Crate-wide error type. The variants map onto the CLI exit codes:
/// `Input` -> 2, `Capacity` -> 3, `Stage` -> 4, everything else -> 4.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or inconsistent input data.
    #[error("input error: {0}")]
    Input(String),

    /// The requested exhaustive computation exceeds a hard cap.
    #[error("capacity error: {0}")]
    Capacity(String),

    /// A pipeline stage failed; the stage name is preserved for reports.
    #[error("stage `{stage}` failed: {message}")]
    Stage { stage: &'static str, message: String },

    /// An internal invariant was violated. This always signals a bug.
    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub fn capacity(msg: impl Into<String>) -> Self {
        Error::Capacity(msg.into())
    }

    pub fn internal(msg: impl Into<String>) -> Self {
        Error::Internal(msg.into())
    }

    pub fn stage(stage: &'static str, msg: impl std::fmt::Display) -> Self {
        Error::Stage { stage, message: msg.to_string() }
    }

    /// Process exit code for the CLI layer.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Input(_) => 2,
            Error::Capacity(_) => 3,
            Error::Stage { .. } => 4,
            Error::Internal(_) | Error::Io(_) | Error::Json(_) => 4,
        }
    }
}
