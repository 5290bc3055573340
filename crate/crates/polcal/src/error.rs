//! Crate-wide error type.
//!
//! Variants map onto the CLI exit codes: configuration problems exit 1,
//! data problems (parse, validation, I/O) exit 2, training aborts exit 3.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Bad configuration value (zero clusters, empty templates, bad weights, ...).
    #[error("config: {0}")]
    Config(String),

    /// A malformed record in an interchange file, cited by 1-based line number.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// A well-formed record that violates a domain invariant.
    #[error("validation failed for `{id}`: {msg}")]
    Validation { id: String, msg: String },

    /// Tensor shape incompatibility, naming the offending op.
    #[error("shape mismatch in {op}: {detail}")]
    Shape { op: &'static str, detail: String },

    /// Training diverged or produced non-finite values.
    #[error("training aborted: {0}")]
    Training(String),

    /// Anything else wrong with input data.
    #[error("data: {0}")]
    Data(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub fn training(msg: impl Into<String>) -> Self {
        Error::Training(msg.into())
    }

    pub fn validation(id: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Validation {
            id: id.into(),
            msg: msg.into(),
        }
    }

    /// Process exit code for the CLI: 1 config, 2 data, 3 training.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 1,
            Error::Training(_) => 3,
            _ => 2,
        }
    }

    /// Short machine-parsable kind tag used on stderr.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::Parse { .. } => "parse",
            Error::Validation { .. } => "validation",
            Error::Shape { .. } => "shape",
            Error::Training(_) => "training",
            Error::Data(_) => "data",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
