use thiserror::Error;

use crate::linear::Trajectory;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("gamma has a pole at {0}")]
    Pole(f64),
    #[error("argument {0} is outside the representable range")]
    Overflow(f64),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("series did not converge within {max_terms} terms")]
    NonConvergence { max_terms: usize },
    #[error("singular point: {0}")]
    SingularPoint(String),
    #[error("support error: t = {t} does not exceed s*h^k = {bound}")]
    Support { t: f64, bound: f64 },
    #[error("matrices do not commute (commutator norm {0:e})")]
    NotCommuting(f64),
    #[error("recursion depth {depth} exceeds the supported maximum {max}")]
    RecursionDepth { depth: usize, max: usize },
    #[error("history is marked analytic but no fractional derivative was supplied")]
    MissingDerivative,
    #[error("invalid step configuration: {0}")]
    StepSize(String),
    #[error("perturbation weighted norm {norm:e} exceeds epsilon {epsilon:e}")]
    PerturbationTooLarge { norm: f64, epsilon: f64 },
    #[error("fixed-point iteration stopped after {iterations} iterations with update {last_update:e}")]
    MaxIter { iterations: usize, last_update: f64, last: Box<Trajectory> },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

pub type Result<T> = std::result::Result<T, Error>;
