//! Error types, one enum per subsystem.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SignalError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("degenerate signal: {0}")]
    DegenerateSignal(String),
    #[error("heart-rate estimation needs at least {needed} beat windows, got {got}")]
    InsufficientBeats { needed: usize, got: usize },
}

#[derive(Debug, Error)]
pub enum NnError {
    #[error("shape mismatch in {op}: expected {expected}, got {got}")]
    ShapeMismatch { op: &'static str, expected: String, got: String },
    #[error("invalid argument in {op}: {msg}")]
    InvalidArgument { op: &'static str, msg: String },
}

impl NnError {
    pub fn shape(op: &'static str, expected: impl Into<String>, got: impl Into<String>) -> Self {
        NnError::ShapeMismatch { op, expected: expected.into(), got: got.into() }
    }

    pub fn invalid(op: &'static str, msg: impl Into<String>) -> Self {
        NnError::InvalidArgument { op, msg: msg.into() }
    }
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model config: {0}")]
    Config(String),
    #[error(transparent)]
    Nn(#[from] NnError),
}

#[derive(Debug, Error)]
pub enum DataError {
    #[error("invalid generator spec: {0}")]
    Config(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("io error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed {what} in {path}: {msg}")]
    Malformed { what: &'static str, path: String, msg: String },
    #[error(transparent)]
    Signal(#[from] SignalError),
}

impl DataError {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        DataError::Io { path: path.into(), source }
    }
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("ROC undefined: {0}")]
    UndefinedRoc(String),
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("checkpoint config hash {found} does not match model config hash {expected}")]
    ConfigHashMismatch { expected: String, found: String },
    #[error("checkpoint malformed: {0}")]
    MalformedCheckpoint(String),
    #[error("training setup: {0}")]
    Setup(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("io error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}
