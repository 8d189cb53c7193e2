use thiserror::Error;

/// Errors produced while building operators, transcribing problems or solving them.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("LGL node solve did not converge for N = {n} (residual {residual:e})")]
    NodeSolve { n: usize, residual: f64 },

    #[error("operator construction defect: {0}")]
    OperatorDefect(String),

    #[error(
        "callback `{callback}` returned {got} values, expected {expected} (interval {interval}, node {node})"
    )]
    CallbackDimension {
        callback: &'static str,
        interval: usize,
        node: usize,
        expected: usize,
        got: usize,
    },

    #[error("callback `{callback}` returned {got} values, expected {expected}")]
    EndpointDimension {
        callback: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("supplied Jacobian `{which}` disagrees with finite differences (relative error {rel_err:e})")]
    JacobianMismatch { which: &'static str, rel_err: f64 },

    #[error("singular linear system in interval {interval}")]
    SingularInterval { interval: usize },

    #[error("solver failed: {0}")]
    SolverFailure(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
