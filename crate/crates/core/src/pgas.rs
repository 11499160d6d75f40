//! Conditional sequential Monte Carlo with ancestor sampling (PGAS) for the
//! latent path beta_{1:T}, with both proposal strategies: the linearized
//! observation-equation proposal and the inverse-transform Student-t
//! proposal.
//!
//! All weight arithmetic stays in the log domain; normalization goes through
//! log-sum-exp. Proposal draws use per-particle counter-based substreams, so
//! a sweep is bit-identical whether the particle loop runs serially or on a
//! thread pool.

use crate::error::{Error, Result};
use crate::model::{log_normal_pdf, mean_at, DatasetSpec, LatentPath, ModelParams};
use crate::rng::{RngTree, StreamDomain};
use crate::special::{inverse_obs, ln_gamma, obs_mean_deriv};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use rayon::prelude::*;

/// Particle count above which proposal loops move onto the rayon pool.
const PARALLEL_THRESHOLD: usize = 512;

/// Weight-degeneracy trip wires.
const MAX_WEIGHT_HIGH: f64 = 0.999;
const HIGH_WEIGHT_STREAK: u32 = 3;
const C_MAX: f64 = 32.0;

/// Proposal strategy for new particles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProposalKind {
    /// Gaussian from a first-order expansion of the observation mean around
    /// the propagated parent, damped by the constant c.
    Linearized,
    /// Student-t centered on the inverse transform of the observation,
    /// falling back to the linearized proposal off-support.
    InverseTransformT,
}

/// Tuning for the particle proposals.
#[derive(Debug, Clone, Copy)]
pub struct ProposalConfig {
    pub kind: ProposalKind,
    /// Linearization damping, >= 1; doubled (up to 32) when weights pile up.
    pub c: f64,
    /// Degrees of freedom of the inverse-transform proposal.
    pub t_df: f64,
    /// Floor on the Student-t scale.
    pub t_scale_floor: f64,
}

impl Default for ProposalConfig {
    fn default() -> Self {
        Self { kind: ProposalKind::InverseTransformT, c: 1.0, t_df: 5.0, t_scale_floor: 1e-3 }
    }
}

impl ProposalConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c >= 1.0) {
            return Err(Error::InvalidParams(format!("proposal c must be >= 1, got {}", self.c)));
        }
        if !(self.t_df >= 1.0) {
            return Err(Error::InvalidParams(format!("t_df must be >= 1, got {}", self.t_df)));
        }
        if !(self.t_scale_floor > 0.0) {
            return Err(Error::InvalidParams("t_scale_floor must be > 0".into()));
        }
        Ok(())
    }
}

/// Observation-side hooks of the state space model. The production model maps
/// beta through the GEV copula transform; tests substitute simpler maps (the
/// identity map turns the sweep into an exactly solvable linear-Gaussian
/// filter).
pub trait ObservationMap: Sync {
    /// E[Y_t | beta_t] at 0-based step t.
    fn mean(&self, t: usize, beta: f64) -> f64;
    /// d mean / d beta.
    fn mean_deriv(&self, t: usize, beta: f64) -> f64;
    /// beta with mean(t, beta) = y, or None off-support.
    fn inverse(&self, t: usize, y: f64) -> Option<f64>;
}

/// The dGEV observation map (seasonal terms included when configured).
pub struct GevObservationMap<'a> {
    pub params: &'a ModelParams,
}

impl ObservationMap for GevObservationMap<'_> {
    fn mean(&self, t: usize, beta: f64) -> f64 {
        mean_at((t + 1) as f64, beta, self.params)
    }

    fn mean_deriv(&self, t: usize, beta: f64) -> f64 {
        let _ = t; // the seasonal shift is additive, so the derivative is unchanged
        obs_mean_deriv(beta, self.params.gev)
    }

    fn inverse(&self, t: usize, y: f64) -> Option<f64> {
        inverse_obs(y - self.params.seasonal_term((t + 1) as f64), self.params.gev)
    }
}

/// Identity observation map: Y_t = beta_t + noise. Test harness hook for the
/// exactly solvable surrogate model.
pub struct IdentityObservationMap;

impl ObservationMap for IdentityObservationMap {
    fn mean(&self, _t: usize, beta: f64) -> f64 {
        beta
    }

    fn mean_deriv(&self, _t: usize, _beta: f64) -> f64 {
        1.0
    }

    fn inverse(&self, _t: usize, y: f64) -> Option<f64> {
        Some(y)
    }
}

/// Deterministic stream bundle for one sweep.
#[derive(Debug, Clone, Copy)]
pub struct SweepStreams {
    tree: RngTree,
    iteration: u64,
}

impl SweepStreams {
    pub fn new(tree: RngTree, iteration: u64) -> Self {
        Self { tree, iteration }
    }

    /// Convenience constructor from a bare seed.
    pub fn from_seed(seed: u64, iteration: u64) -> Self {
        Self::new(RngTree::new(seed), iteration)
    }

    fn propose(&self, t: usize, k: usize) -> rand_pcg::Pcg64 {
        self.tree
            .stream(StreamDomain::PgasPropose, self.iteration, t as u64, k as u64)
    }

    fn resample(&self, t: usize) -> rand_pcg::Pcg64 {
        self.tree
            .stream(StreamDomain::PgasResample, self.iteration, t as u64, 0)
    }

    fn ancestor(&self, t: usize) -> rand_pcg::Pcg64 {
        self.tree
            .stream(StreamDomain::PgasAncestor, self.iteration, t as u64, 0)
    }

    fn final_draw(&self) -> rand_pcg::Pcg64 {
        self.tree.stream(StreamDomain::PgasFinal, self.iteration, 0, 0)
    }
}

/// Full particle state of one conditional SMC sweep. Slot N-1 always holds
/// the reference trajectory value before the final draw.
#[derive(Debug, Clone)]
pub struct ParticleSystem {
    pub n: usize,
    pub t_len: usize,
    /// particles[t][k].
    pub particles: Vec<Vec<f64>>,
    /// ancestors[t][k] = parent slot of particle (t, k); ancestors[0] is the
    /// identity.
    pub ancestors: Vec<Vec<usize>>,
    /// Log weights of the final step.
    pub log_weights: Vec<f64>,
    /// Normalized weights of the final step.
    pub normalized_weights: Vec<f64>,
    /// The conditioned trajectory.
    pub reference: Vec<f64>,
}

impl ParticleSystem {
    /// Reconstruct the trajectory ending in slot `k` at the final step.
    pub fn trajectory(&self, k: usize) -> Vec<f64> {
        let mut path = vec![0.0; self.t_len];
        let mut slot = k;
        for t in (0..self.t_len).rev() {
            path[t] = self.particles[t][slot];
            slot = self.ancestors[t][slot];
        }
        path
    }
}

/// Per-sweep diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct SweepDiagnostics {
    /// Smallest effective sample size across steps.
    pub min_ess: f64,
    /// Damping constant after any within-sweep adaptation.
    pub final_c: f64,
    /// Number of c-doubling events.
    pub c_adaptations: u32,
}

/// A sampled path plus sweep diagnostics.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub path: LatentPath,
    pub diagnostics: SweepDiagnostics,
}

/// Draw `count` indices iid from the normalized `weights`.
pub fn multinomial_resample<R: Rng + ?Sized>(
    weights: &[f64],
    count: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let mut cumulative = Vec::with_capacity(weights.len());
    let mut total = 0.0;
    for &w in weights {
        if !w.is_finite() || w < 0.0 {
            return Err(Error::DegenerateWeights {
                t: 0,
                max_log_weight: f64::NAN,
                ess: f64::NAN,
            });
        }
        total += w;
        cumulative.push(total);
    }
    if !(total > 0.0) {
        return Err(Error::DegenerateWeights {
            t: 0,
            max_log_weight: f64::NEG_INFINITY,
            ess: f64::NAN,
        });
    }
    let draws = (0..count)
        .map(|_| {
            let u: f64 = rng.random::<f64>() * total;
            cumulative.partition_point(|&c| c <= u).min(weights.len() - 1)
        })
        .collect();
    Ok(draws)
}

/// Sample the reference particle's ancestor: index l with probability
/// proportional to w_{t-1}^l * N(ref_t; phi prev_l, 1 - phi^2).
pub fn ancestor_sample<R: Rng + ?Sized>(
    ref_beta_t: f64,
    prev_particles: &[f64],
    log_weights: &[f64],
    phi: f64,
    rng: &mut R,
) -> Result<usize> {
    debug_assert_eq!(prev_particles.len(), log_weights.len());
    let var = 1.0 - phi * phi;
    let logs: Vec<f64> = prev_particles
        .iter()
        .zip(log_weights)
        .map(|(&p, &lw)| {
            let d = ref_beta_t - phi * p;
            lw - d * d / (2.0 * var)
        })
        .collect();
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::DegenerateWeights {
            t: 0,
            max_log_weight: max,
            ess: f64::NAN,
        });
    }
    let weights: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
    Ok(multinomial_resample(&weights, 1, rng)?[0])
}

/// Moments (nu, tau^2) of the linearized one-step proposal given the
/// propagated prior N(prior_mean, prior_var).
fn linearized_moments<M: ObservationMap>(
    map: &M,
    t: usize,
    y_t: f64,
    prior_mean: f64,
    prior_var: f64,
    sigma2: f64,
    c: f64,
) -> (f64, f64) {
    let m = prior_mean;
    let s = map.mean_deriv(t, m) / c;
    let precision = 1.0 / prior_var + s * s / sigma2;
    let tau2 = 1.0 / precision;
    let nu = tau2 * (m / prior_var + s * (y_t - map.mean(t, m) + s * m) / sigma2);
    (nu, tau2)
}

fn student_t_log_norm(df: f64) -> f64 {
    ln_gamma((df + 1.0) / 2.0) - ln_gamma(df / 2.0) - 0.5 * (df * std::f64::consts::PI).ln()
}

fn student_t_log_pdf(z: f64, df: f64) -> f64 {
    student_t_log_norm(df) - (df + 1.0) / 2.0 * (z * z / df).ln_1p()
}

/// The per-step proposal law, fixed across particles at one time step except
/// for the parent-dependent prior of the linearized branch. Normalizing
/// constants are hoisted here so the per-particle work is arithmetic only.
#[derive(Debug, Clone, Copy)]
enum StepProposal {
    InverseT { beta_hat: f64, scale: f64, ln_scale: f64, df: f64, log_norm: f64 },
    Linearized { c: f64 },
}

fn choose_step_proposal<M: ObservationMap>(
    map: &M,
    t: usize,
    y_t: f64,
    sigma: f64,
    cfg: &ProposalConfig,
    c: f64,
) -> StepProposal {
    match cfg.kind {
        ProposalKind::Linearized => StepProposal::Linearized { c },
        ProposalKind::InverseTransformT => match map.inverse(t, y_t) {
            Some(beta_hat) => {
                let deriv = map.mean_deriv(t, beta_hat);
                let scale = (sigma / deriv).max(cfg.t_scale_floor);
                StepProposal::InverseT {
                    beta_hat,
                    scale,
                    ln_scale: scale.ln(),
                    df: cfg.t_df,
                    log_norm: student_t_log_norm(cfg.t_df),
                }
            }
            // Support violation: this observation cannot be inverted, so every
            // particle at this step falls back to the linearized proposal.
            None => StepProposal::Linearized { c },
        },
    }
}

fn draw_from_proposal<M: ObservationMap, R: Rng + ?Sized>(
    proposal: StepProposal,
    map: &M,
    t: usize,
    y_t: f64,
    prior_mean: f64,
    prior_var: f64,
    sigma2: f64,
    rng: &mut R,
) -> (f64, f64) {
    match proposal {
        StepProposal::InverseT { beta_hat, scale, ln_scale, df, log_norm } => {
            let tv: f64 = StudentT::new(df).expect("valid df").sample(rng);
            let draw = beta_hat + scale * tv;
            let lq = log_norm - (df + 1.0) / 2.0 * (tv * tv / df).ln_1p() - ln_scale;
            (draw, lq)
        }
        StepProposal::Linearized { c } => {
            let (nu, tau2) = linearized_moments(map, t, y_t, prior_mean, prior_var, sigma2, c);
            let z: f64 = StandardNormal.sample(rng);
            let draw = nu + tau2.sqrt() * z;
            (draw, log_normal_pdf(draw, nu, tau2))
        }
    }
}

fn log_q_at<M: ObservationMap>(
    proposal: StepProposal,
    map: &M,
    t: usize,
    y_t: f64,
    prior_mean: f64,
    prior_var: f64,
    sigma2: f64,
    value: f64,
) -> f64 {
    match proposal {
        StepProposal::InverseT { beta_hat, scale, ln_scale, df, log_norm } => {
            let z = (value - beta_hat) / scale;
            log_norm - (df + 1.0) / 2.0 * (z * z / df).ln_1p() - ln_scale
        }
        StepProposal::Linearized { c } => {
            let (nu, tau2) = linearized_moments(map, t, y_t, prior_mean, prior_var, sigma2, c);
            log_normal_pdf(value, nu, tau2)
        }
    }
}

/// Draw one particle from the linearized proposal given the parent value.
/// Returns the draw and its proposal log density.
pub fn propose_linearized<R: Rng + ?Sized>(
    beta_prev: f64,
    y_t: f64,
    t: usize,
    params: &ModelParams,
    cfg: &ProposalConfig,
    rng: &mut R,
) -> (f64, f64) {
    let map = GevObservationMap { params };
    draw_from_proposal(
        StepProposal::Linearized { c: cfg.c },
        &map,
        t,
        y_t,
        params.phi * beta_prev,
        1.0 - params.phi * params.phi,
        params.sigma2,
        rng,
    )
}

/// Draw one particle from the inverse-transform Student-t proposal, or None
/// when the observation violates the GEV support at this step.
pub fn propose_inverse_t<R: Rng + ?Sized>(
    y_t: f64,
    t: usize,
    params: &ModelParams,
    cfg: &ProposalConfig,
    rng: &mut R,
) -> Option<(f64, f64)> {
    let map = GevObservationMap { params };
    match choose_step_proposal(&map, t, y_t, params.sigma2.sqrt(), cfg, cfg.c) {
        p @ StepProposal::InverseT { .. } => {
            Some(draw_from_proposal(p, &map, t, y_t, 0.0, 1.0, params.sigma2, rng))
        }
        StepProposal::Linearized { .. } => None,
    }
}

struct NormalizedWeights {
    weights: Vec<f64>,
    ess: f64,
    max_log: f64,
}

fn normalize_log_weights(log_w: &[f64], t: usize) -> Result<NormalizedWeights> {
    let max_log = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max_log.is_finite() {
        return Err(Error::DegenerateWeights { t, max_log_weight: max_log, ess: f64::NAN });
    }
    let unnorm: Vec<f64> = log_w.iter().map(|l| (l - max_log).exp()).collect();
    let total: f64 = unnorm.iter().sum();
    let weights: Vec<f64> = unnorm.iter().map(|w| w / total).collect();
    let ess = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();
    if !ess.is_finite() || ess < 1.0 + 1e-9 {
        return Err(Error::DegenerateWeights { t, max_log_weight: max_log, ess });
    }
    Ok(NormalizedWeights { weights, ess, max_log })
}

/// Run a conditional SMC sweep and return the full particle system; the
/// reference occupies slot N-1 at every step.
#[allow(clippy::too_many_arguments)]
pub fn run_csmc<M: ObservationMap>(
    y: &[f64],
    reference: &[f64],
    phi: f64,
    sigma2: f64,
    map: &M,
    n_particles: usize,
    cfg: &ProposalConfig,
    streams: SweepStreams,
) -> Result<(ParticleSystem, SweepDiagnostics)> {
    cfg.validate()?;
    if n_particles < 2 {
        return Err(Error::InvalidParams(format!(
            "n_particles must be >= 2, got {n_particles}"
        )));
    }
    let t_len = y.len();
    if reference.len() != t_len {
        return Err(Error::InvalidParams(format!(
            "reference length {} != data length {t_len}",
            reference.len()
        )));
    }
    let n = n_particles;
    let ref_slot = n - 1;
    let trans_var = 1.0 - phi * phi;
    let sigma = sigma2.sqrt();
    // Gaussian normalizers are constant across the sweep.
    let c_obs = -0.5 * (2.0 * std::f64::consts::PI * sigma2).ln();
    let c_trans = -0.5 * (2.0 * std::f64::consts::PI * trans_var).ln();
    let c_init = -crate::special::LN_SQRT_2PI;

    let mut c = cfg.c.max(1.0);
    let mut c_adaptations = 0u32;
    let mut high_streak = 0u32;
    let mut min_ess = f64::INFINITY;

    let mut particles: Vec<Vec<f64>> = Vec::with_capacity(t_len);
    let mut ancestors: Vec<Vec<usize>> = Vec::with_capacity(t_len);
    let mut log_weights = vec![0.0f64; n];

    // t = 0: propose free particles from q(.|Y_1), pin the reference, and
    // weight by f(Y_1 | beta) pi(beta) / q(beta). The per-particle task
    // (draw + weight) carries the expensive transform evaluations, so it is
    // what goes onto the thread pool.
    let prop0 = choose_step_proposal(map, 0, y[0], sigma, cfg, c);
    let mut values = vec![0.0f64; n];
    {
        let task = |k: usize| {
            let mut rng = streams.propose(0, k);
            let (v, lq) = draw_from_proposal(prop0, map, 0, y[0], 0.0, 1.0, sigma2, &mut rng);
            let r = y[0] - map.mean(0, v);
            let lw = c_obs - r * r / (2.0 * sigma2) + c_init - 0.5 * v * v - lq;
            (v, lw)
        };
        let draws: Vec<(f64, f64)> = if n > PARALLEL_THRESHOLD {
            (0..n - 1).into_par_iter().map(task).collect()
        } else {
            (0..n - 1).map(task).collect()
        };
        for (k, (v, lw)) in draws.into_iter().enumerate() {
            values[k] = v;
            log_weights[k] = lw;
        }
        let ref_lq = log_q_at(prop0, map, 0, y[0], 0.0, 1.0, sigma2, reference[0]);
        let r = y[0] - map.mean(0, reference[0]);
        values[ref_slot] = reference[0];
        log_weights[ref_slot] =
            c_obs - r * r / (2.0 * sigma2) + c_init - 0.5 * reference[0] * reference[0] - ref_lq;
    }
    particles.push(values);
    ancestors.push((0..n).collect());

    let mut norm = normalize_log_weights(&log_weights, 0)?;
    min_ess = min_ess.min(norm.ess);
    adapt_c(&norm.weights, &mut c, &mut high_streak, &mut c_adaptations);

    for t in 1..t_len {
        // Resample parents for the free particles, ancestor-sample the
        // reference's parent.
        let mut anc = {
            let mut rng = streams.resample(t);
            multinomial_resample(&norm.weights, n - 1, &mut rng).map_err(|_| {
                Error::DegenerateWeights { t, max_log_weight: norm.max_log, ess: norm.ess }
            })?
        };
        let ref_parent = {
            let mut rng = streams.ancestor(t);
            ancestor_sample(reference[t], &particles[t - 1], &log_weights, phi, &mut rng)
                .map_err(|_| Error::DegenerateWeights {
                    t,
                    max_log_weight: norm.max_log,
                    ess: norm.ess,
                })?
        };
        anc.push(ref_parent);

        let prop = choose_step_proposal(map, t, y[t], sigma, cfg, c);
        let prev = &particles[t - 1];
        let mut values = vec![0.0f64; n];
        let task = |k: usize| {
            let parent = prev[anc[k]];
            let mut rng = streams.propose(t, k);
            let (v, lq) =
                draw_from_proposal(prop, map, t, y[t], phi * parent, trans_var, sigma2, &mut rng);
            let r = y[t] - map.mean(t, v);
            let d = v - phi * parent;
            let lw = c_obs - r * r / (2.0 * sigma2) + c_trans - d * d / (2.0 * trans_var) - lq;
            (v, lw)
        };
        let draws: Vec<(f64, f64)> = if n > PARALLEL_THRESHOLD {
            (0..n - 1).into_par_iter().map(task).collect()
        } else {
            (0..n - 1).map(task).collect()
        };
        for (k, (v, lw)) in draws.into_iter().enumerate() {
            values[k] = v;
            log_weights[k] = lw;
        }
        let ref_lq = log_q_at(
            prop,
            map,
            t,
            y[t],
            phi * prev[ref_parent],
            trans_var,
            sigma2,
            reference[t],
        );
        let r = y[t] - map.mean(t, reference[t]);
        let d = reference[t] - phi * prev[ref_parent];
        values[ref_slot] = reference[t];
        log_weights[ref_slot] =
            c_obs - r * r / (2.0 * sigma2) + c_trans - d * d / (2.0 * trans_var) - ref_lq;

        particles.push(values);
        ancestors.push(anc);

        norm = normalize_log_weights(&log_weights, t)?;
        min_ess = min_ess.min(norm.ess);
        adapt_c(&norm.weights, &mut c, &mut high_streak, &mut c_adaptations);
    }

    debug_assert!((norm.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    let system = ParticleSystem {
        n,
        t_len,
        particles,
        ancestors,
        log_weights,
        normalized_weights: norm.weights,
        reference: reference.to_vec(),
    };
    let diagnostics = SweepDiagnostics { min_ess, final_c: c, c_adaptations };
    Ok((system, diagnostics))
}

fn adapt_c(weights: &[f64], c: &mut f64, streak: &mut u32, events: &mut u32) {
    let max_w = weights.iter().copied().fold(0.0f64, f64::max);
    if max_w > MAX_WEIGHT_HIGH {
        *streak += 1;
        if *streak >= HIGH_WEIGHT_STREAK && *c < C_MAX {
            *c = (*c * 2.0).min(C_MAX);
            *events += 1;
            *streak = 0;
        }
    } else {
        *streak = 0;
    }
}

/// One full PGAS sweep for the dGEV model: runs the conditional SMC with the
/// GEV observation map and draws the returned trajectory from the final
/// weights. The sampled path leaves the conditional posterior of the latent
/// vector invariant.
pub fn csmc_sweep(
    data: &DatasetSpec,
    reference: &LatentPath,
    params: &ModelParams,
    n_particles: usize,
    cfg: &ProposalConfig,
    streams: SweepStreams,
) -> Result<SweepResult> {
    let map = GevObservationMap { params };
    csmc_sweep_with_map(
        &data.y,
        &reference.beta,
        params.phi,
        params.sigma2,
        &map,
        n_particles,
        cfg,
        streams,
    )
}

/// Sweep over an arbitrary observation map; the production entry point wraps
/// this with `GevObservationMap`.
#[allow(clippy::too_many_arguments)]
pub fn csmc_sweep_with_map<M: ObservationMap>(
    y: &[f64],
    reference: &[f64],
    phi: f64,
    sigma2: f64,
    map: &M,
    n_particles: usize,
    cfg: &ProposalConfig,
    streams: SweepStreams,
) -> Result<SweepResult> {
    let (system, diagnostics) = run_csmc(y, reference, phi, sigma2, map, n_particles, cfg, streams)?;
    let k = {
        let mut rng = streams.final_draw();
        multinomial_resample(&system.normalized_weights, 1, &mut rng)?[0]
    };
    Ok(SweepResult { path: LatentPath::new(system.trajectory(k)), diagnostics })
}
