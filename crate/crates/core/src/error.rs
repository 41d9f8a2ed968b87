use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("malformed file {path}: {msg}")]
    Format { path: PathBuf, msg: String },
    #[error("corrupt file {path}: {msg}")]
    Corruption { path: PathBuf, msg: String },
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("undefined input: {0}")]
    UndefinedInput(String),
    #[error("segmentation produced no surviving component")]
    EmptySegmentation,
    #[error("non-finite value at iteration {iteration}")]
    Numerical { iteration: usize },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("item {item}: {source}")]
    Item {
        item: String,
        #[source]
        source: Box<Error>,
    },
    #[error("{} item(s) failed:{}", .0.len(), list(.0))]
    Batch(Vec<Error>),
}

fn list(errors: &[Error]) -> String {
    errors.iter().map(|e| format!("\n  {e}")).collect()
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_item(self, item: impl Into<String>) -> Self {
        Error::Item {
            item: item.into(),
            source: Box::new(self),
        }
    }

    /// Process exit code: 2 validation, 3 I/O, 4 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 3,
            Error::Numerical { .. } => 4,
            Error::Item { source, .. } => source.exit_code(),
            Error::Batch(errors) => errors.iter().map(Error::exit_code).max().unwrap_or(2),
            _ => 2,
        }
    }
}

macro_rules! ensure {
    ($cond:expr, $variant:ident, $($fmt:tt)+) => {
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !$cond {
            return Err($crate::error::Error::$variant(format!($($fmt)+)));
        }
    };
}
pub(crate) use ensure;
