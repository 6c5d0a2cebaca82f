use thiserror::Error;

/// Errors produced by the simulator, builders and estimators.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("capacity exceeded: {what} is {got}, limit is {limit}")]
    Capacity {
        what: &'static str,
        got: usize,
        limit: usize,
    },

    #[error(
        "infeasible time budget: tau = {tau} must exceed {minimum} for the {protocol} protocol"
    )]
    InfeasibleBudget {
        protocol: &'static str,
        tau: f64,
        minimum: f64,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("model domain error: {0}")]
    ModelDomain(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
