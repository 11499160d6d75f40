//! The full MCMC driver: initialization, the five-step sweep (theta block,
//! sigma^2, phi, optional seasonal coefficients, PGAS), burn-in and thinning,
//! and draw storage.

use crate::error::{Error, Result};
use crate::laplace::{build_proposal, find_mode, mh_independence_step, ModeFit, OptimOptions};
use crate::model::{
    log_post_phi, sigma2_posterior_params, seasonal_posterior_params, DatasetSpec, LatentPath,
    ModelParams, Priors, Seasonal, ThetaConditional,
};
use crate::pgas::{csmc_sweep, ProposalConfig, SweepStreams};
use crate::rng::{RngTree, StreamDomain};
use crate::special::{inverse_obs, GevParams};
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use std::time::Instant;

/// Published default seed for the bundled simulation configs.
pub const DEFAULT_SEED: u64 = 271_828;

/// Latent draws are clipped to this band during initialization.
const INIT_BETA_CLIP: f64 = 4.0;

/// Soft sanity band for MH acceptance rates; rates outside are logged.
const ACCEPT_BAND: (f64, f64) = (0.05, 0.99);

/// Consecutive PGAS degeneracies tolerated before the chain aborts.
const MAX_PGAS_FAILURES: usize = 10;

/// Random-walk step used when a Laplace proposal cannot be built.
const FALLBACK_RW_STEP: f64 = 0.05;

/// Full chain configuration.
#[derive(Debug, Clone)]
pub struct ChainConfig {
    pub n_iter: usize,
    pub burn_in: usize,
    pub n_particles: usize,
    /// Keep every `thin_beta`-th latent path after burn-in.
    pub thin_beta: usize,
    pub seed: u64,
    pub proposal: ProposalConfig,
    pub priors: Priors,
    pub seasonal: bool,
    /// Cycles per time unit; required when `seasonal` is set.
    pub freq: Option<f64>,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            n_iter: 20_000,
            burn_in: 5_000,
            n_particles: 1_000,
            thin_beta: 10,
            seed: DEFAULT_SEED,
            proposal: ProposalConfig::default(),
            priors: Priors::default(),
            seasonal: false,
            freq: None,
        }
    }
}

impl ChainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.burn_in >= self.n_iter {
            return Err(Error::InvalidParams(format!(
                "burn_in ({}) must be < n_iter ({})",
                self.burn_in, self.n_iter
            )));
        }
        if self.n_particles < 2 {
            return Err(Error::InvalidParams("n_particles must be >= 2".into()));
        }
        if self.thin_beta < 1 {
            return Err(Error::InvalidParams("thin_beta must be >= 1".into()));
        }
        if self.seasonal {
            match self.freq {
                Some(f) if f > 0.0 && f.is_finite() => {}
                _ => {
                    return Err(Error::InvalidParams(
                        "seasonal fits require a positive freq".into(),
                    ))
                }
            }
        }
        self.priors.validate()?;
        self.proposal.validate()
    }
}

/// One line of the per-iteration run log.
#[derive(Debug, Clone, Copy)]
pub struct IterRecord {
    /// 1-based iteration index.
    pub iter: usize,
    pub theta_accepted: bool,
    pub phi_accepted: bool,
    /// Smallest PGAS effective sample size this sweep (NaN on failure).
    pub min_ess: f64,
    pub c_adaptations: u32,
    pub theta_opt_converged: bool,
    pub phi_opt_converged: bool,
    /// A Laplace proposal failed and the step used a random walk instead.
    pub fallback_rw: bool,
    pub pgas_failed: bool,
}

/// Per-iteration records plus post-run warnings.
#[derive(Debug, Clone, Default)]
pub struct RunLog {
    pub records: Vec<IterRecord>,
    pub warnings: Vec<String>,
}

/// Wall-clock seconds per phase.
#[derive(Debug, Clone, Copy, Default)]
pub struct Timing {
    pub theta_s: f64,
    pub sigma_s: f64,
    pub phi_s: f64,
    pub seasonal_s: f64,
    pub pgas_s: f64,
    pub total_s: f64,
}

/// Stored MCMC draws (post burn-in) plus run metadata.
#[derive(Debug, Clone)]
pub struct ChainDraws {
    pub mu: Vec<f64>,
    pub psi: Vec<f64>,
    pub xi: Vec<f64>,
    pub phi: Vec<f64>,
    /// sigma stored as sqrt of the sigma^2 draw.
    pub sigma: Vec<f64>,
    pub a1: Option<Vec<f64>>,
    pub a2: Option<Vec<f64>>,
    /// Thinned latent paths.
    pub beta: Vec<Vec<f64>>,
    /// 1-based iteration of each stored latent path.
    pub beta_iters: Vec<usize>,
    /// 1-based iteration of each kept scalar draw.
    pub kept_iters: Vec<usize>,
    pub accept_theta: usize,
    pub accept_phi: usize,
    pub n_iter: usize,
    pub burn_in: usize,
    pub run_log: RunLog,
    pub timing: Timing,
}

impl ChainDraws {
    pub fn kept(&self) -> usize {
        self.mu.len()
    }

    pub fn theta_acceptance_rate(&self) -> f64 {
        self.accept_theta as f64 / self.n_iter as f64
    }

    pub fn phi_acceptance_rate(&self) -> f64 {
        self.accept_phi as f64 / self.n_iter as f64
    }
}

/// Latent starting values: inverse_obs per observation, clipped to
/// [-4, 4], with out-of-support observations mapped to 0.
pub fn initial_latent(data: &DatasetSpec, gev: GevParams) -> LatentPath {
    let beta = data
        .y
        .iter()
        .map(|&y| match inverse_obs(y, gev) {
            Some(b) => b.clamp(-INIT_BETA_CLIP, INIT_BETA_CLIP),
            None => 0.0,
        })
        .collect();
    LatentPath::new(beta)
}

/// Moment-based starting values: median for mu, IQR/2 for psi, 0.1 for xi,
/// 0 for phi, 1e-2 * var(y) for sigma^2, and the inverse-transform latent
/// path.
///
/// For seasonal fits the sinusoid coefficients start at their least-squares
/// fit to the centered data and the latent path inverts the de-seasonalized
/// observations. Starting instead at a = (0, 0) lets the first particle
/// sweep absorb the sinusoid into the latent path, which then pins the chain
/// in a near-unit-root basin whenever the data cover only a cycle or two.
pub fn initialize(data: &DatasetSpec, config: &ChainConfig) -> Result<(ModelParams, LatentPath)> {
    let mu0 = crate::diagnostics::quantile(&data.y, 0.5);
    let iqr = crate::diagnostics::quantile(&data.y, 0.75) - crate::diagnostics::quantile(&data.y, 0.25);
    if !(iqr > 0.0) {
        return Err(Error::Init("data interquartile range is zero".into()));
    }
    let n = data.len() as f64;
    let mean = data.y.iter().sum::<f64>() / n;
    let var = data.y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    let gev = GevParams::new(mu0, iqr / 2.0, 0.1)?;
    let seasonal = if config.seasonal {
        let omega = 2.0 * std::f64::consts::PI * config.freq.expect("validated");
        let (mut m11, mut m12, mut m22, mut r1, mut r2) = (0.0f64, 0.0, 0.0, 0.0, 0.0);
        for (i, &y) in data.y.iter().enumerate() {
            let t = (i + 1) as f64;
            let (c, s) = ((omega * t).cos(), (omega * t).sin());
            m11 += c * c;
            m12 += c * s;
            m22 += s * s;
            r1 += c * (y - mean);
            r2 += s * (y - mean);
        }
        let det = m11 * m22 - m12 * m12;
        let (a1, a2) = if det.abs() > 1e-12 {
            ((m22 * r1 - m12 * r2) / det, (m11 * r2 - m12 * r1) / det)
        } else {
            (0.0, 0.0)
        };
        Some(Seasonal { a1, a2, omega })
    } else {
        None
    };
    let params = ModelParams::new(gev, 0.0, 1e-2 * var, seasonal)?;
    let beta = match seasonal {
        Some(s) => {
            let deseasonalized = DatasetSpec {
                y: data
                    .y
                    .iter()
                    .enumerate()
                    .map(|(i, &y)| y - s.term((i + 1) as f64))
                    .collect(),
                ..data.clone()
            };
            initial_latent(&deseasonalized, gev)
        }
        None => initial_latent(data, gev),
    };
    Ok((params, beta))
}

fn artanh(x: f64) -> f64 {
    0.5 * ((1.0 + x) / (1.0 - x)).ln()
}

/// Outcome of one Laplace-proposal MH block.
struct BlockOutcome {
    point: Vec<f64>,
    accepted: bool,
    opt_converged: bool,
    fallback_rw: bool,
}

/// Shared machinery of the theta and phi blocks: refresh the Laplace
/// proposal at the current conditional posterior (warm-started mode search),
/// then take one independence MH step. Falls back to a symmetric random walk
/// when the proposal covariance cannot be built.
fn laplace_block<F, R>(
    target: &F,
    current: &[f64],
    warm_start: &mut Vec<f64>,
    opts: &OptimOptions,
    iteration: usize,
    rng: &mut R,
) -> Result<BlockOutcome>
where
    F: Fn(&[f64]) -> f64,
    R: Rng + ?Sized,
{
    let (fit, opt_converged): (ModeFit, bool) = match find_mode(target, warm_start, opts) {
        Ok(fit) => (fit, true),
        Err(Error::ModeSearch { best, .. }) => (*best, false),
        Err(Error::NonFiniteObjective { .. }) => {
            // Warm start soured (e.g. previous mode off-support after other
            // blocks moved); retry once from the current state.
            match find_mode(target, current, opts) {
                Ok(fit) => (fit, true),
                Err(Error::ModeSearch { best, .. }) => (*best, false),
                Err(e) => {
                    return Err(Error::OptimizerFailure { iteration, source: Box::new(e) })
                }
            }
        }
        Err(e) => return Err(Error::OptimizerFailure { iteration, source: Box::new(e) }),
    };
    *warm_start = fit.point.clone();

    match build_proposal(&fit.point, &fit.neg_hessian, &fit.gradient) {
        Ok(proposal) => {
            let (point, accepted) = mh_independence_step(current, target, &proposal, rng);
            Ok(BlockOutcome { point, accepted, opt_converged, fallback_rw: false })
        }
        Err(Error::SingularProposal) => {
            // Symmetric random walk keeps the chain valid when the curvature
            // is unusable.
            let candidate: Vec<f64> = current
                .iter()
                .map(|&v| {
                    let z: f64 = StandardNormal.sample(rng);
                    v + FALLBACK_RW_STEP * z
                })
                .collect();
            let log_ratio = target(&candidate) - target(current);
            let u: f64 = rng.random();
            let accepted = log_ratio.is_finite() && u.ln() < log_ratio || log_ratio == f64::INFINITY;
            let point = if accepted { candidate } else { current.to_vec() };
            Ok(BlockOutcome { point, accepted, opt_converged, fallback_rw: true })
        }
        Err(e) => Err(Error::OptimizerFailure { iteration, source: Box::new(e) }),
    }
}

/// One theta-block update in (mu, log psi, xi) working coordinates; the +l
/// term is the log Jacobian of psi = exp(l).
pub(crate) fn theta_step<R: Rng + ?Sized>(
    cond: &ThetaConditional,
    current: GevParams,
    warm_start: &mut Vec<f64>,
    opts: &OptimOptions,
    iteration: usize,
    rng: &mut R,
) -> Result<(GevParams, BlockFlags)> {
    let target = |v: &[f64]| {
        let theta = GevParams { mu: v[0], psi: v[1].exp(), xi: v[2] };
        cond.log_post(theta) + v[1]
    };
    let current_v = [current.mu, current.psi.ln(), current.xi];
    let outcome = laplace_block(&target, &current_v, warm_start, opts, iteration, rng)?;
    let next = GevParams {
        mu: outcome.point[0],
        psi: outcome.point[1].exp(),
        xi: outcome.point[2],
    };
    Ok((next, BlockFlags::from(&outcome)))
}

/// One phi update in the artanh working coordinate, Jacobian-corrected.
pub(crate) fn phi_step<R: Rng + ?Sized>(
    beta: &LatentPath,
    current_phi: f64,
    warm_start: &mut Vec<f64>,
    opts: &OptimOptions,
    iteration: usize,
    rng: &mut R,
) -> Result<(f64, BlockFlags)> {
    let target = |w: &[f64]| {
        let phi = w[0].tanh();
        let jac = 1.0 - phi * phi;
        if jac <= 0.0 {
            return f64::NEG_INFINITY;
        }
        log_post_phi(phi, beta) + jac.ln()
    };
    let current_w = [artanh(current_phi)];
    let outcome = laplace_block(&target, &current_w, warm_start, opts, iteration, rng)?;
    let phi = outcome.point[0].tanh().clamp(-1.0 + 1e-12, 1.0 - 1e-12);
    Ok((phi, BlockFlags::from(&outcome)))
}

/// Acceptance and bookkeeping flags from one MH block.
pub(crate) struct BlockFlags {
    pub accepted: bool,
    pub opt_converged: bool,
    pub fallback_rw: bool,
}

impl From<&BlockOutcome> for BlockFlags {
    fn from(o: &BlockOutcome) -> Self {
        Self { accepted: o.accepted, opt_converged: o.opt_converged, fallback_rw: o.fallback_rw }
    }
}

/// Draw sigma^2 from its conjugate inverse-gamma conditional with the given
/// shape and rate.
pub fn sample_sigma2<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> f64 {
    let gamma = Gamma::new(shape, 1.0 / rate).expect("valid gamma parameters");
    1.0 / gamma.sample(rng)
}

/// Draw the seasonal coefficients from their MVN conditional.
fn draw_seasonal<R: Rng + ?Sized>(mean: [f64; 2], cov: [[f64; 2]; 2], rng: &mut R) -> [f64; 2] {
    // 2x2 Cholesky.
    let l11 = cov[0][0].sqrt();
    let l21 = cov[0][1] / l11;
    let l22 = (cov[1][1] - l21 * l21).max(0.0).sqrt();
    let z1: f64 = StandardNormal.sample(rng);
    let z2: f64 = StandardNormal.sample(rng);
    [mean[0] + l11 * z1, mean[1] + l21 * z1 + l22 * z2]
}

/// Run the full MCMC chain: theta-block MH, sigma^2 Gibbs, phi MH, the
/// seasonal Gibbs update when configured, then PGAS for the latent path.
/// Output is bit-identical for identical (data, config).
pub fn run_chain(data: &DatasetSpec, config: &ChainConfig) -> Result<ChainDraws> {
    config.validate()?;
    let start = Instant::now();
    let tree = RngTree::new(config.seed);
    let opts = OptimOptions::default();

    let (mut params, mut beta) = initialize(data, config)?;
    let mut theta_warm = vec![params.gev.mu, params.gev.psi.ln(), params.gev.xi];
    let mut phi_warm = vec![artanh(params.phi)];

    // Refine the moment-based start to the conditional Laplace modes. An
    // independence sampler whose Gaussian proposal is centered on the mode
    // can take e^50+ iterations to leave a start that far outside the
    // proposal's typical set; starting at the modes removes that trap
    // without touching the MH kernel itself.
    {
        let cond = ThetaConditional::new(data, &beta, &params, &config.priors);
        let theta_target = |v: &[f64]| {
            let theta = GevParams { mu: v[0], psi: v[1].exp(), xi: v[2] };
            cond.log_post(theta) + v[1]
        };
        let theta_fit = match find_mode(&theta_target, &theta_warm, &opts) {
            Ok(fit) => Some(fit),
            Err(Error::ModeSearch { best, .. }) => Some(*best),
            Err(_) => None, // keep the moment-based start
        };
        if let Some(fit) = theta_fit {
            params.gev = GevParams { mu: fit.point[0], psi: fit.point[1].exp(), xi: fit.point[2] };
            theta_warm = fit.point;
        }
        let phi_target = |w: &[f64]| {
            let phi = w[0].tanh();
            let jac = 1.0 - phi * phi;
            if jac <= 0.0 {
                return f64::NEG_INFINITY;
            }
            log_post_phi(phi, &beta) + jac.ln()
        };
        let phi_fit = match find_mode(&phi_target, &phi_warm, &opts) {
            Ok(fit) => Some(fit),
            Err(Error::ModeSearch { best, .. }) => Some(*best),
            Err(_) => None,
        };
        if let Some(fit) = phi_fit {
            params.phi = fit.point[0].tanh().clamp(-1.0 + 1e-12, 1.0 - 1e-12);
            phi_warm = fit.point;
        }
    }

    let kept_capacity = config.n_iter - config.burn_in;
    let mut draws = ChainDraws {
        mu: Vec::with_capacity(kept_capacity),
        psi: Vec::with_capacity(kept_capacity),
        xi: Vec::with_capacity(kept_capacity),
        phi: Vec::with_capacity(kept_capacity),
        sigma: Vec::with_capacity(kept_capacity),
        a1: config.seasonal.then(|| Vec::with_capacity(kept_capacity)),
        a2: config.seasonal.then(|| Vec::with_capacity(kept_capacity)),
        beta: Vec::new(),
        beta_iters: Vec::new(),
        kept_iters: Vec::with_capacity(kept_capacity),
        accept_theta: 0,
        accept_phi: 0,
        n_iter: config.n_iter,
        burn_in: config.burn_in,
        run_log: RunLog::default(),
        timing: Timing::default(),
    };
    let mut timing = Timing::default();
    let mut pgas_failures = 0usize;

    for iter in 0..config.n_iter {
        // 1. theta block.
        let t0 = Instant::now();
        let cond = ThetaConditional::new(data, &beta, &params, &config.priors);
        let mut rng = tree.stream(StreamDomain::ThetaBlock, iter as u64, 0, 0);
        let (theta, theta_flags) =
            theta_step(&cond, params.gev, &mut theta_warm, &opts, iter, &mut rng)?;
        params.gev = theta;
        draws.accept_theta += theta_flags.accepted as usize;
        timing.theta_s += t0.elapsed().as_secs_f64();

        // 2. sigma^2 Gibbs.
        let t1 = Instant::now();
        let (shape, rate) = sigma2_posterior_params(data, &beta, &params, &config.priors);
        let mut rng = tree.stream(StreamDomain::Sigma2, iter as u64, 0, 0);
        params.sigma2 = sample_sigma2(shape, rate, &mut rng);
        timing.sigma_s += t1.elapsed().as_secs_f64();

        // 3. phi block.
        let t2 = Instant::now();
        let mut rng = tree.stream(StreamDomain::PhiBlock, iter as u64, 0, 0);
        let (phi, phi_flags) = phi_step(&beta, params.phi, &mut phi_warm, &opts, iter, &mut rng)?;
        params.phi = phi;
        draws.accept_phi += phi_flags.accepted as usize;
        timing.phi_s += t2.elapsed().as_secs_f64();

        // 4. seasonal coefficients.
        if config.seasonal {
            let t3 = Instant::now();
            let (mean, cov) = seasonal_posterior_params(data, &beta, &params, &config.priors);
            let mut rng = tree.stream(StreamDomain::Seasonal, iter as u64, 0, 0);
            let a = draw_seasonal(mean, cov, &mut rng);
            let omega = params.seasonal.expect("seasonal active").omega;
            params.seasonal = Some(Seasonal { a1: a[0], a2: a[1], omega });
            timing.seasonal_s += t3.elapsed().as_secs_f64();
        }

        // 5. latent path via PGAS.
        let t4 = Instant::now();
        let streams = SweepStreams::new(tree, iter as u64);
        let (min_ess, c_adaptations, pgas_failed) =
            match csmc_sweep(data, &beta, &params, config.n_particles, &config.proposal, streams) {
                Ok(result) => {
                    beta = result.path;
                    pgas_failures = 0;
                    (result.diagnostics.min_ess, result.diagnostics.c_adaptations, false)
                }
                Err(Error::DegenerateWeights { .. }) => {
                    // Keep the current reference path and count the failure.
                    pgas_failures += 1;
                    if pgas_failures > MAX_PGAS_FAILURES {
                        return Err(Error::PgasAborted {
                            iteration: iter,
                            consecutive: pgas_failures,
                        });
                    }
                    (f64::NAN, 0, true)
                }
                Err(e) => return Err(e),
            };
        timing.pgas_s += t4.elapsed().as_secs_f64();

        draws.run_log.records.push(IterRecord {
            iter: iter + 1,
            theta_accepted: theta_flags.accepted,
            phi_accepted: phi_flags.accepted,
            min_ess,
            c_adaptations,
            theta_opt_converged: theta_flags.opt_converged,
            phi_opt_converged: phi_flags.opt_converged,
            fallback_rw: theta_flags.fallback_rw || phi_flags.fallback_rw,
            pgas_failed,
        });

        if iter >= config.burn_in {
            draws.mu.push(params.gev.mu);
            draws.psi.push(params.gev.psi);
            draws.xi.push(params.gev.xi);
            draws.phi.push(params.phi);
            draws.sigma.push(params.sigma2.sqrt());
            if let Some(s) = params.seasonal {
                draws.a1.as_mut().expect("seasonal storage").push(s.a1);
                draws.a2.as_mut().expect("seasonal storage").push(s.a2);
            }
            draws.kept_iters.push(iter + 1);
            if (iter - config.burn_in) % config.thin_beta == 0 {
                draws.beta.push(beta.beta.clone());
                draws.beta_iters.push(iter + 1);
            }
        }
    }

    let theta_rate = draws.theta_acceptance_rate();
    let phi_rate = draws.phi_acceptance_rate();
    for (name, rate) in [("theta", theta_rate), ("phi", phi_rate)] {
        if rate < ACCEPT_BAND.0 || rate > ACCEPT_BAND.1 {
            draws.run_log.warnings.push(format!(
                "{name} block acceptance rate {rate:.3} outside sanity band ({}, {})",
                ACCEPT_BAND.0, ACCEPT_BAND.1
            ));
        }
    }

    timing.total_s = start.elapsed().as_secs_f64();
    draws.timing = timing;
    Ok(draws)
}
