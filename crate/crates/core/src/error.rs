use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value in row {row}")]
    NonFinite { row: usize },

    #[error("dimension mismatch: expected {expected} columns, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("kernel fit did not converge (sum of squared residuals {residual:.3e})")]
    KernelFit { residual: f64 },

    #[error("non-finite gradient on edge ({head}, {tail}) in epoch {epoch}")]
    NonFiniteGradient {
        head: usize,
        tail: usize,
        epoch: usize,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
