use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A matrix that must be inverted is singular or too ill-conditioned.
    #[error("singular matrix: {0}")]
    Singular(String),

    /// An iterative procedure ran out of iterations.
    #[error("no convergence after {iterations} iterations: {context}")]
    NonConvergence { iterations: usize, context: String },

    /// A requested target cannot be reached (for example zero noncentrality).
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// An approximation is zero while the exact noncentrality is positive.
    #[error("degenerate approximation: {0}")]
    DegenerateApproximation(String),

    /// Invalid configuration (unknown sweep axis, bad ranges, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// Reading or writing output failed.
    #[error("i/o error: {0}")]
    Io(String),

    /// Every Monte Carlo replicate failed to produce a usable fit.
    #[error("estimation error: {0}")]
    Estimation(String),
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
