use thiserror::Error;

use crate::control_synthesis::ControlSolution;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("quadrature accuracy not attainable: {0}")]
    Accuracy(String),

    #[error("charge equation ill-conditioned at step {step}: |1 + K_nn| = {magnitude:e}")]
    Conditioning { step: usize, magnitude: f64 },

    #[error("degenerate state: {0}")]
    DegenerateState(String),

    #[error("no nonzero expansion coefficient up to order {max_order}")]
    NoExpansionOrder { max_order: usize },

    #[error("indeterminate phase: {0}")]
    IndeterminatePhase(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("degenerate linearization: sigma1 = {sigma1:e}, sigma2 = {sigma2:e}")]
    DegenerateLinearization { sigma1: f64, sigma2: f64 },

    #[error("Gauss-Newton did not converge: residual {:e} after {} iterations", .0.residual, .0.iterations)]
    NoConvergence(Box<ControlSolution>),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
