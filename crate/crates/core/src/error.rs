use thiserror::Error;

use crate::krotov::OptimizationTrace;

#[derive(Debug, Error)]
pub enum Error {
    #[error("integrator produced non-finite values at t = {time}")]
    IntegratorFailure { time: f64 },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("Cramér–Rao bound violated: eta = {eta:e}")]
    CrbViolation { eta: f64 },

    #[error("no informative observable: every candidate has a vanishing slope")]
    NoInformativeObservable,

    #[error("Krotov optimization failed to decrease J after {retries} step-size doublings at iteration {iteration}")]
    NonConvergence {
        iteration: usize,
        retries: usize,
        trace: Box<OptimizationTrace>,
    },

    #[error("readout fit is not monotone on [{lo}, {hi}]")]
    NonMonotoneFit { lo: f64, hi: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
