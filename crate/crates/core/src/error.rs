use thiserror::Error;

use crate::dynamics::TrajectoryRecord;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Inconsistent grids, unsupported dimensions, invalid solver settings.
    #[error("configuration error: {0}")]
    Config(String),

    /// A value outside the domain of an operation.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// The caller violated a documented precondition.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The integrator produced a non-finite or exploding state.
    /// The trajectory sampled so far is attached when available.
    #[error("solver diverged at t = {t}: {reason}")]
    Diverged {
        t: f64,
        reason: String,
        partial: Option<Box<TrajectoryRecord>>,
    },

    #[error("snapshot format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn argument(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}
