use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// One rejected row or feature in an input file.
#[derive(Debug, Clone, PartialEq)]
pub struct RowError {
    /// 1-based line number (CSV) or 0-based feature index (GeoJSON).
    pub line: usize,
    pub field: String,
    pub message: String,
}

impl fmt::Display for RowError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: field `{}`: {}", self.line, self.field, self.message)
    }
}

fn join_rows(errors: &[RowError]) -> String {
    errors
        .iter()
        .map(|e| e.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("grids are not aligned: {0}")]
    Alignment(String),

    #[error("planar frames differ: {0}")]
    Frame(String),

    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("invalid parameter `{name}`: {message}")]
    InvalidParam { name: &'static str, message: String },

    #[error("land-cover class {0} has no weight in the active weight table")]
    UnknownClass(i32),

    #[error("land-cover class {0} has no unit cost in the cost model")]
    UnpricedLandClass(i32),

    #[error("road class `{0}` has no unit cost in the cost model")]
    UnpricedRoadClass(String),

    #[error("tract `{0}` is missing from the demographics table")]
    MissingTract(String),

    #[error("{0}")]
    Validation(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("{}: schema error in `{field}`: {message}", path.display())]
    Schema {
        path: PathBuf,
        field: String,
        message: String,
    },

    #[error("{}: {} invalid row(s): {}", path.display(), errors.len(), join_rows(errors))]
    Rows { path: PathBuf, errors: Vec<RowError> },

    #[error("{}:{line}: {message}", path.display())]
    Format {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn schema(
        path: impl Into<PathBuf>,
        field: impl Into<String>,
        message: impl Into<String>,
    ) -> Self {
        Error::Schema {
            path: path.into(),
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    /// Process exit status for this error: 1 for validation failures,
    /// 2 for I/O and file-format problems.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Schema { .. } | Error::Rows { .. } | Error::Format { .. } | Error::Io { .. } => 2,
            _ => 1,
        }
    }
}
