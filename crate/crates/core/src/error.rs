use thiserror::Error;

/// Errors raised by the solvers and verification instruments.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("lattice integration diverged at step {step}")]
    Divergence { step: usize },

    #[error("dual-to-primal map singular at x = {x} (denominator 0, numerator {numerator})")]
    DtpSingular { x: f64, numerator: f64 },

    #[error("point {x} outside the extended domain [{lo}, {hi}]")]
    OutOfRange { x: f64, lo: f64, hi: f64 },

    #[error("linear solve failed: zero pivot at row {row}")]
    LinearSolve { row: usize },

    #[error("operator I + u K is singular at Fourier mode {mode} (symbol {symbol:e})")]
    SingularOperator { mode: usize, symbol: f64 },

    #[error("convexity guard a + K nu > eps violated at {} grid points", .indices.len())]
    DomainViolation { indices: Vec<usize> },

    #[error("iteration degenerate: {0}")]
    DegenerateIterate(String),

    #[error("solver did not converge after {iterations} iterations ({reason}, gradient {grad_inf:e})")]
    NotConverged { reason: String, iterations: usize, grad_inf: f64 },

    #[error("starting point lies in the penalty region")]
    InvalidStart,

    #[error("only {found} sign changes in the tail window (need {needed})")]
    TooFewCrossings { found: usize, needed: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
