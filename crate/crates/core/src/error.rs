use thiserror::Error;

/// Errors raised by the solver, state constructions and the discretized oracle.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("quadrature did not converge: estimate {value:e}, error {error:e} after {evaluations} evaluations ({context})")]
    Quadrature {
        value: f64,
        error: f64,
        evaluations: usize,
        context: String,
    },

    #[error("root finding failed: {0}")]
    Root(String),

    #[error("no solution: {0}")]
    NoSolution(String),

    #[error("truncation too small: {reason} (need at least {required})")]
    Truncation { reason: String, required: usize },

    #[error("unsupported sector N = {0} (exact dynamics is limited to N <= 2)")]
    UnsupportedSector(u32),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
