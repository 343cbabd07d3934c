use thiserror::Error;

/// Errors produced by the engine, the auditor and the harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid pmf: {0}")]
    InvalidPmf(String),

    #[error("tail tolerance {0} outside (0, 1e-6]")]
    ToleranceOutOfRange(f64),

    #[error("parameter out of range: {0}")]
    ParameterOutOfRange(String),

    #[error("degenerate law: {0}")]
    Degenerate(String),

    #[error("grid of {required} cells exceeds the memory budget of {budget} cells ({shape})")]
    ResourceBudget { required: usize, budget: usize, shape: String },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("conditioning event P(S_N = {m}) = {prob:e} is indistinguishable from the error budget {budget:e}")]
    IllConditioned { m: i64, prob: f64, budget: f64 },

    #[error("quadrature did not converge: last refinement changed the integral by {estimate:e}")]
    QuadratureFailure { estimate: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("no acceptance after {proposals} proposals (target m = {m})")]
    NoAcceptance { proposals: u64, m: i64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
