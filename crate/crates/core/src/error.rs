//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the samplers and numerical kernels.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside the mathematical domain of a scalar kernel.
    #[error("domain error in {op}: {msg}")]
    Domain { op: &'static str, msg: String },

    /// Model parameters violate their support constraints.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// A draw vector had zero variance, so autocorrelations are undefined.
    #[error("zero-variance input: {0}")]
    ZeroVariance(String),

    /// Chain initialization could not produce usable starting values.
    #[error("initialization failed: {0}")]
    Init(String),

    /// Every particle weight collapsed at step `t` of a conditional SMC sweep.
    #[error(
        "degenerate particle weights at t={t} (max log-weight {max_log_weight:.3}, ESS {ess:.3})"
    )]
    DegenerateWeights {
        t: usize,
        max_log_weight: f64,
        ess: f64,
    },

    /// PGAS failed more than the tolerated number of consecutive sweeps.
    #[error("PGAS degenerated for {consecutive} consecutive sweeps at iteration {iteration}")]
    PgasAborted {
        iteration: usize,
        consecutive: usize,
    },

    /// Mode search did not reach the gradient tolerance; carries the best point found.
    #[error("mode search did not converge after {iterations} iterations (|grad| = {grad_norm:.3e})")]
    ModeSearch {
        iterations: usize,
        grad_norm: f64,
        best: Box<crate::laplace::ModeFit>,
    },

    /// The objective was non-finite at the starting point or collapsed to NaN.
    #[error("non-finite objective during mode search at iteration {iteration}")]
    NonFiniteObjective { iteration: usize },

    /// A proposal covariance could not be factorized even after ridge repair.
    #[error("proposal covariance is not positive definite (ridge repair failed)")]
    SingularProposal,

    /// The optimizer failed hard inside the MCMC loop.
    #[error("optimizer failure at MCMC iteration {iteration}: {source}")]
    OptimizerFailure {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
