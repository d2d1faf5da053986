use comc_core::ModelError;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid {field}: {reason}")]
    Config { field: &'static str, reason: String },

    #[error("scenario rejected: {0}")]
    Rejected(String),

    #[error(transparent)]
    Model(#[from] ModelError),

    #[error(
        "collision at t = {time:.2} s: vehicle {follower} is {net_gap:.3} m behind vehicle {leader}"
    )]
    Collision {
        time: f64,
        leader: u64,
        follower: u64,
        net_gap: f64,
    },

    #[error("vehicle bookkeeping broken at t = {time:.2} s: {detail}")]
    Conservation { time: f64, detail: String },
}

impl SimError {
    pub(crate) fn config(field: &'static str, reason: impl Into<String>) -> Self {
        SimError::Config {
            field,
            reason: reason.into(),
        }
    }
}
