//! Bayesian inference engine for the dependent GEV (dGEV) model: a GEV
//! observation law whose latent dependence comes from a Gaussian copula with
//! AR(1) structure.
//!
//! The sampler combines blocked Metropolis-Hastings with Laplace proposals
//! for (mu, psi, xi), conjugate Gibbs updates for sigma^2 and the seasonal
//! coefficients, a mode-finding Metropolis step for phi, and particle Gibbs
//! with ancestor sampling (PGAS) for the latent path. A simulator and
//! posterior diagnostics round out the crate; the `dgev` CLI in this
//! workspace drives everything from the command line.

pub mod diagnostics;
pub mod error;
pub mod gibbs;
pub mod laplace;
pub mod model;
pub mod pgas;
pub mod rng;
pub mod simulate;
pub mod special;

pub use error::{Error, Result};
pub use model::{DatasetSpec, LatentPath, ModelParams, Priors, Seasonal, Standardization};
pub use special::GevParams;
