use thiserror::Error;

/// Errors reported by the solvers and checkers.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A root bracket did not contain a sign change.
    #[error("bracketing failure: {0}")]
    Bracket(String),

    /// A domain mask has no interior nodes.
    #[error("empty interior: {0}")]
    EmptyInterior(String),

    /// A direct or iterative linear solve failed.
    #[error("solver failure: {0}")]
    Solver(String),

    /// An iteration hit its budget before reaching the requested tolerance.
    #[error("no convergence after {iterations} iterations (last change {last_change:.3e})")]
    NoConvergence { iterations: usize, last_change: f64 },

    /// Two independent evaluation routes disagree beyond the allowed slack.
    #[error("consistency failure: {0}")]
    Inconsistent(String),

    /// The spectral gap is too small for a simple-eigenvalue formula.
    #[error("near-degenerate eigenvalue: {0}")]
    NearDegenerate(String),

    /// Malformed input file or specification.
    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
