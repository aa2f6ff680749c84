use std::path::PathBuf;

/// A single rejected input row. `line` is 1-based and counts the header.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowError {
    pub line: u64,
    pub bill_id: Option<String>,
    pub message: String,
}

impl std::fmt::Display for RowError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.bill_id {
            Some(id) => write!(f, "line {} ({id}): {}", self.line, self.message),
            None => write!(f, "line {}: {}", self.line, self.message),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("missing required column `{0}`")]
    MissingColumn(String),

    #[error("{} invalid row(s); first: {}", .0.len(), .0[0])]
    Rows(Vec<RowError>),

    #[error("corpus error: {0}")]
    Corpus(String),

    #[error("catalog request failed after {attempts} attempt(s): {message}")]
    Fetch { attempts: u32, message: String },

    #[error("malformed catalog page {page}: {message}")]
    Page { page: usize, message: String },

    #[error("cannot decode {what}{}: {message}", .offset.map(|o| format!(" at byte {o}")).unwrap_or_default())]
    Decode {
        what: String,
        offset: Option<usize>,
        message: String,
    },

    #[error("incompatible {what}: expected {expected}, found {found}")]
    Incompatible {
        what: &'static str,
        expected: String,
        found: String,
    },

    #[error("{0}")]
    Argument(String),

    #[error("{failed} of {total} grid cells failed")]
    GridCells { failed: usize, total: usize },

    #[error(transparent)]
    Numeric(#[from] billmap_core::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn argument(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    /// Process exit status for this error: 1 for bad data or files, 2 for
    /// bad arguments or incompatible inputs, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        use billmap_core::Error as Core;
        match self {
            Error::Argument(_) | Error::Incompatible { .. } => 2,
            Error::Numeric(Core::InvalidArgument(_) | Core::DimensionMismatch { .. }) => 2,
            Error::Numeric(Core::NonFinite { .. }) => 1,
            Error::Numeric(_) | Error::GridCells { .. } => 3,
            _ => 1,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
