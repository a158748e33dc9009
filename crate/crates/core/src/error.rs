use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    Dimension {
        context: String,
        expected: String,
        got: String,
    },
    #[error("index {index} out of range for {context} (size {size})")]
    Index {
        context: String,
        index: usize,
        size: usize,
    },
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("integrity error in game {game_id}: {message}")]
    Integrity { game_id: i64, message: String },
    #[error("format error: {0}")]
    Format(String),
    #[error("missing entry: {0}")]
    AbsentKey(String),
    #[error("incompatible checkpoint: {0}")]
    Compatibility(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("missing dependency: {0}")]
    Dependency(String),
    #[error("non-finite value: {0}")]
    Numeric(String),
    #[error("gradient check failed: {0}")]
    GradCheck(String),
    #[error("rank deficient system: {0}")]
    Rank(String),
    #[error("degenerate data: {0}")]
    Degenerate(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn dim(context: impl Into<String>, expected: impl ToString, got: impl ToString) -> Self {
        Error::Dimension {
            context: context.into(),
            expected: expected.to_string(),
            got: got.to_string(),
        }
    }

    pub(crate) fn index(context: impl Into<String>, index: usize, size: usize) -> Self {
        Error::Index {
            context: context.into(),
            index,
            size,
        }
    }

    /// Process exit code used by the command-line runner:
    /// 1 usage/configuration, 2 data, 3 numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Argument(_) | Error::Config(_) | Error::Dependency(_) => 1,
            Error::Numeric(_) | Error::GradCheck(_) | Error::Rank(_) | Error::Degenerate(_) => 3,
            _ => 2,
        }
    }
}
