use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Iterative routine ran out of budget.
    #[error("did not converge: {what} (residual {residual:e})")]
    NoConvergence { what: &'static str, residual: f64 },

    /// A result violated a numeric sanity bound (e.g. a probability outside [0, 1]).
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Alternating sum too ill-conditioned to trust in double precision.
    #[error("precision loss: condition number {condition:e} exceeds {limit:e}")]
    PrecisionLoss { condition: f64, limit: f64 },

    /// Too few Monte Carlo events for a meaningful probability estimate.
    #[error("insufficient events: {events} of {trials} trials (need at least {required})")]
    InsufficientEvents { events: u64, trials: u64, required: u64 },
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
