use thiserror::Error;

/// Errors raised by tensor algebra, model assembly, training and I/O.
#[derive(Debug, Error)]
pub enum CfError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal {off:.3e})")]
    NonConvergence { sweeps: usize, off: f64 },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("training aborted at iteration {iteration}: loss {loss}, max |grad| {max_grad}")]
    TrainingAborted {
        iteration: usize,
        loss: f64,
        max_grad: f64,
    },

    #[error("ADMM diverged at outer iteration {outer}: residual {residual:.3e} vs minimum {minimum:.3e}")]
    Diverged {
        outer: usize,
        residual: f64,
        minimum: f64,
    },

    #[error("decode error: {0}")]
    Decode(String),

    #[error("config error for key `{key}`: {message}")]
    Config { key: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CfError>;

impl CfError {
    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        CfError::ShapeMismatch(msg.into())
    }

    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        CfError::InvalidDimension(msg.into())
    }

    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        CfError::InvalidArgument(msg.into())
    }

    /// Whether the error stems from a numerical failure rather than bad input or I/O.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            CfError::NonConvergence { .. }
                | CfError::NonFinite(_)
                | CfError::TrainingAborted { .. }
                | CfError::Diverged { .. }
        )
    }

    pub fn is_io(&self) -> bool {
        matches!(self, CfError::Io(_) | CfError::Decode(_))
    }
}
