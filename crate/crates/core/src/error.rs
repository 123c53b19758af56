use std::path::PathBuf;

/// Errors produced anywhere in the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {what} at index {index}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        index: usize,
        expected: usize,
        found: usize,
    },

    #[error("delay vector {delay:?} is not in the model alphabet")]
    AlphabetViolation { delay: Vec<usize> },

    #[error("numeric fault: {context} produced a non-finite value")]
    NumericFault { context: String },

    #[error("invalid transition matrix, row {row}: {reason}")]
    InvalidTpm { row: usize, reason: String },

    #[error("duplicate delay vector {delay:?} at alphabet positions {first} and {second}")]
    DuplicateDelay {
        delay: Vec<usize>,
        first: usize,
        second: usize,
    },

    #[error("mode {mode} out of range 1..={modes}")]
    ModeOutOfRange { mode: usize, modes: usize },

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: String,
    },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("all values in the fit window are below the zero floor (first at k = {k})")]
    DecayedBelowFloor { k: usize },

    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn param(name: &'static str, value: f64, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            value,
            reason: reason.into(),
        }
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    /// Process exit code for the command-line front end.
    ///
    /// 1 = validation, 2 = numeric fault, 3 = I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NumericFault { .. } => 2,
            Error::Io { .. } => 3,
            _ => 1,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
