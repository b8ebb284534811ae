use thiserror::Error;

/// Error type shared by every module in this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    /// A series evaluation gave up. `hint` names the recommended fallback.
    #[error("series did not converge within {max_terms} terms (last term magnitude {last_term:e}); {hint}")]
    Convergence {
        max_terms: usize,
        last_term: f64,
        hint: String,
    },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("degenerate trace: {0}")]
    DegenerateTrace(String),

    #[error("no table row for {knob} = {value}; available values: {available}")]
    RowNotFound {
        knob: String,
        value: f64,
        available: String,
    },

    #[error("infinite transmission latency: {0}")]
    InfiniteLatency(String),

    #[error("singularity: {0}")]
    Singularity(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("simulation runaway: {0}")]
    Runaway(String),
}

pub type Result<T> = std::result::Result<T, Error>;
