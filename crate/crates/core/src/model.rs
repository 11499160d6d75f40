//! Model parameter containers, prior specification, and the log-density
//! evaluations behind every MCMC block: observation likelihood, latent AR(1)
//! transition, and the conditional posteriors of the static parameters.

use crate::error::{Error, Result};
use crate::special::{gev_tail_transform, ln_gamma, log_cdf_unchecked, obs_mean, GevParams};

/// Sinusoidal seasonal component on the location parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Seasonal {
    pub a1: f64,
    pub a2: f64,
    /// Angular frequency omega = 2 pi f.
    pub omega: f64,
}

impl Seasonal {
    /// Seasonal offset a1 cos(omega t) + a2 sin(omega t) at (1-based) time t.
    #[inline]
    pub fn term(&self, t: f64) -> f64 {
        self.a1 * (self.omega * t).cos() + self.a2 * (self.omega * t).sin()
    }
}

/// Static model parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub gev: GevParams,
    /// AR(1) coefficient of the latent path, |phi| < 1.
    pub phi: f64,
    /// Observation noise variance, > 0.
    pub sigma2: f64,
    pub seasonal: Option<Seasonal>,
}

impl ModelParams {
    pub fn new(gev: GevParams, phi: f64, sigma2: f64, seasonal: Option<Seasonal>) -> Result<Self> {
        if !(phi.is_finite() && phi.abs() < 1.0) {
            return Err(Error::InvalidParams(format!("|phi| must be < 1, got {phi}")));
        }
        // sigma2 = 0 is allowed so the simulator can generate noise-free,
        // copula-exact data; inference paths all keep sigma2 strictly positive.
        if !(sigma2.is_finite() && sigma2 >= 0.0) {
            return Err(Error::InvalidParams(format!("sigma2 must be >= 0, got {sigma2}")));
        }
        if let Some(s) = seasonal {
            if !(s.a1.is_finite() && s.a2.is_finite() && s.omega.is_finite() && s.omega > 0.0) {
                return Err(Error::InvalidParams("invalid seasonal component".into()));
            }
        }
        Ok(Self { gev, phi, sigma2, seasonal })
    }

    #[inline]
    pub fn seasonal_term(&self, t: f64) -> f64 {
        self.seasonal.map_or(0.0, |s| s.term(t))
    }
}

/// Prior hyperparameters.
///
/// mu ~ N(mu_mean, mu_var), psi ~ Gamma(psi_shape, psi_rate),
/// xi ~ N(xi_mean, xi_var), phi ~ U(-1, 1), sigma2 ~ InvGamma(shape, scale),
/// a_i ~ N(0, a_var_i).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Priors {
    pub mu_mean: f64,
    pub mu_var: f64,
    pub psi_shape: f64,
    pub psi_rate: f64,
    pub xi_mean: f64,
    pub xi_var: f64,
    pub sigma2_shape: f64,
    pub sigma2_scale: f64,
    pub a1_var: f64,
    pub a2_var: f64,
}

impl Default for Priors {
    fn default() -> Self {
        Self {
            mu_mean: 0.0,
            mu_var: 4.0,
            psi_shape: 2.0,
            psi_rate: 2.0,
            xi_mean: 0.0,
            xi_var: 4.0,
            sigma2_shape: 1.0,
            sigma2_scale: 0.01,
            a1_var: 100.0,
            a2_var: 100.0,
        }
    }
}

impl Priors {
    pub fn validate(&self) -> Result<()> {
        let positives = [
            ("mu_var", self.mu_var),
            ("psi_shape", self.psi_shape),
            ("psi_rate", self.psi_rate),
            ("xi_var", self.xi_var),
            ("sigma2_shape", self.sigma2_shape),
            ("sigma2_scale", self.sigma2_scale),
            ("a1_var", self.a1_var),
            ("a2_var", self.a2_var),
        ];
        for (name, v) in positives {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParams(format!("prior {name} must be > 0, got {v}")));
            }
        }
        if !(self.mu_mean.is_finite() && self.xi_mean.is_finite()) {
            return Err(Error::InvalidParams("prior means must be finite".into()));
        }
        Ok(())
    }
}

/// The latent vector beta_{1:T}; each element is marginally standard normal.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentPath {
    pub beta: Vec<f64>,
}

impl LatentPath {
    pub fn new(beta: Vec<f64>) -> Self {
        Self { beta }
    }

    pub fn len(&self) -> usize {
        self.beta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beta.is_empty()
    }
}

/// Record of the affine standardization applied to a dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Standardization {
    pub mean: f64,
    pub sd: f64,
}

/// Observations with time labels and optional seasonal frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSpec {
    pub y: Vec<f64>,
    pub time_index: Vec<String>,
    /// Cycles per time unit; required for seasonal fits.
    pub freq: Option<f64>,
    pub standardization: Option<Standardization>,
}

impl DatasetSpec {
    pub fn new(
        y: Vec<f64>,
        time_index: Vec<String>,
        freq: Option<f64>,
        standardization: Option<Standardization>,
    ) -> Result<Self> {
        if y.len() < 2 {
            return Err(Error::InvalidParams(format!("T >= 2 required, got T={}", y.len())));
        }
        if y.len() != time_index.len() {
            return Err(Error::InvalidParams("time index length mismatch".into()));
        }
        if let Some(bad) = y.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParams(format!("non-finite observation {bad}")));
        }
        if let Some(s) = standardization {
            if !(s.sd > 0.0) {
                return Err(Error::InvalidParams("standardization sd must be > 0".into()));
            }
        }
        if let Some(f) = freq {
            if !(f.is_finite() && f > 0.0) {
                return Err(Error::InvalidParams(format!("freq must be > 0, got {f}")));
            }
        }
        Ok(Self { y, time_index, freq, standardization })
    }

    /// Build a dataset with 1..=T as time labels.
    pub fn from_values(y: Vec<f64>) -> Result<Self> {
        let labels = (1..=y.len()).map(|t| t.to_string()).collect();
        Self::new(y, labels, None, None)
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}

/// Observation mean at (1-based) time t: the copula transform of beta_t plus
/// the seasonal sinusoid when present.
#[inline]
pub fn mean_at(t: f64, beta_t: f64, params: &ModelParams) -> f64 {
    obs_mean(beta_t, params.gev) + params.seasonal_term(t)
}

/// Gaussian log density with the given mean and variance.
#[inline]
pub fn log_normal_pdf(x: f64, mean: f64, var: f64) -> f64 {
    let d = x - mean;
    -0.5 * (2.0 * std::f64::consts::PI * var).ln() - d * d / (2.0 * var)
}

/// Observation log likelihood log f(y_t | beta_t, theta, sigma^2).
#[inline]
pub fn log_lik_obs(y_t: f64, beta_t: f64, t: f64, params: &ModelParams) -> f64 {
    log_normal_pdf(y_t, mean_at(t, beta_t, params), params.sigma2)
}

fn log_gamma_pdf(x: f64, shape: f64, rate: f64) -> f64 {
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    shape * rate.ln() - ln_gamma(shape) + (shape - 1.0) * x.ln() - rate * x
}

/// Conditional log posterior of the block theta = (mu, psi, xi), up to a
/// constant: the full observation likelihood plus the three priors.
/// psi <= 0 yields -inf rather than an error.
pub fn log_post_theta(
    theta: GevParams,
    data: &DatasetSpec,
    beta: &LatentPath,
    params: &ModelParams,
    priors: &Priors,
) -> f64 {
    if theta.psi <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let with_theta = ModelParams { gev: theta, ..*params };
    let mut ll = 0.0;
    for (i, (&y, &b)) in data.y.iter().zip(&beta.beta).enumerate() {
        ll += log_lik_obs(y, b, (i + 1) as f64, &with_theta);
    }
    ll + log_normal_pdf(theta.mu, priors.mu_mean, priors.mu_var)
        + log_gamma_pdf(theta.psi, priors.psi_shape, priors.psi_rate)
        + log_normal_pdf(theta.xi, priors.xi_mean, priors.xi_var)
}

/// Conditional log posterior of phi given the latent path, up to a constant.
///
/// Exact AR(1) conditional likelihood: exponent (T-1)/2 on (1 - phi^2) and
/// the phi-free initial term dropped; the uniform(-1,1) prior is constant on
/// its support.
pub fn log_post_phi(phi: f64, beta: &LatentPath) -> f64 {
    if !phi.is_finite() || phi.abs() >= 1.0 {
        return f64::NEG_INFINITY;
    }
    let v = 1.0 - phi * phi;
    if v <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let t = beta.len();
    let mut ss = 0.0;
    for w in beta.beta.windows(2) {
        let r = w[1] - phi * w[0];
        ss += r * r;
    }
    -0.5 * (t as f64 - 1.0) * v.ln() - ss / (2.0 * v)
}

/// Parameters of the conjugate inverse-gamma update for sigma^2:
/// shape a + T/2 and rate b + S/2 with S the sum of squared residuals.
pub fn sigma2_posterior_params(
    data: &DatasetSpec,
    beta: &LatentPath,
    params: &ModelParams,
    priors: &Priors,
) -> (f64, f64) {
    let mut ss = 0.0;
    for (i, (&y, &b)) in data.y.iter().zip(&beta.beta).enumerate() {
        let r = y - mean_at((i + 1) as f64, b, params);
        ss += r * r;
    }
    (priors.sigma2_shape + data.len() as f64 / 2.0, priors.sigma2_scale + ss / 2.0)
}

/// Mean and covariance of the conjugate MVN update for the seasonal
/// coefficients a = (a1, a2).
///
/// Sigma_a^{-1} = (sum_t p_t p_t' ) / sigma^2 + Omega^{-1} and
/// nu_a = Sigma_a (sum_t p_t Ytilde_t) / sigma^2, where Ytilde_t subtracts
/// the non-seasonal mean and Omega = diag(a1_var, a2_var).
pub fn seasonal_posterior_params(
    data: &DatasetSpec,
    beta: &LatentPath,
    params: &ModelParams,
    priors: &Priors,
) -> ([f64; 2], [[f64; 2]; 2]) {
    let omega = params
        .seasonal
        .expect("seasonal component must be active")
        .omega;
    let s2 = params.sigma2;

    let (mut m11, mut m12, mut m22) = (0.0, 0.0, 0.0);
    let (mut r1, mut r2) = (0.0, 0.0);
    for (i, (&y, &b)) in data.y.iter().zip(&beta.beta).enumerate() {
        let t = (i + 1) as f64;
        let (c, s) = ((omega * t).cos(), (omega * t).sin());
        let resid = y - obs_mean(b, params.gev);
        m11 += c * c;
        m12 += c * s;
        m22 += s * s;
        r1 += c * resid;
        r2 += s * resid;
    }

    let p11 = m11 / s2 + 1.0 / priors.a1_var;
    let p12 = m12 / s2;
    let p22 = m22 / s2 + 1.0 / priors.a2_var;
    let det = p11 * p22 - p12 * p12;
    let cov = [[p22 / det, -p12 / det], [-p12 / det, p11 / det]];
    let (b1, b2) = (r1 / s2, r2 / s2);
    let mean = [cov[0][0] * b1 + cov[0][1] * b2, cov[1][0] * b1 + cov[1][1] * b2];
    (mean, cov)
}

/// Precomputed per-sweep quantities for fast repeated evaluation of the
/// theta-block conditional posterior during mode search.
///
/// -log Phi(beta_t) and the seasonal offsets do not depend on theta, so they
/// are cached once per MCMC iteration.
pub struct ThetaConditional<'a> {
    y: &'a [f64],
    ln_neg_log_phi: Vec<f64>,
    seasonal: Vec<f64>,
    sigma2: f64,
    priors: &'a Priors,
}

impl<'a> ThetaConditional<'a> {
    pub fn new(
        data: &'a DatasetSpec,
        beta: &LatentPath,
        params: &ModelParams,
        priors: &'a Priors,
    ) -> Self {
        let ln_neg_log_phi = beta
            .beta
            .iter()
            .map(|&b| (-log_cdf_unchecked(b)).max(f64::MIN_POSITIVE).ln())
            .collect();
        let seasonal = (1..=data.len())
            .map(|t| params.seasonal_term(t as f64))
            .collect();
        Self {
            y: &data.y,
            ln_neg_log_phi,
            seasonal,
            sigma2: params.sigma2,
            priors,
        }
    }

    /// Log posterior at theta, equal (up to the shared constant) to
    /// `log_post_theta` evaluated with the cached beta and seasonal state.
    pub fn log_post(&self, theta: GevParams) -> f64 {
        if theta.psi <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let t_count = self.y.len() as f64;
        let norm = -0.5 * t_count * (2.0 * std::f64::consts::PI * self.sigma2).ln();
        let mut ss = 0.0;
        for i in 0..self.y.len() {
            let transform = if theta.xi.abs() < crate::special::XI_LIMIT {
                -self.ln_neg_log_phi[i]
            } else {
                (-theta.xi * self.ln_neg_log_phi[i]).exp_m1() / theta.xi
            };
            let r = self.y[i] - theta.mu - self.seasonal[i] - theta.psi * transform;
            ss += r * r;
        }
        norm - ss / (2.0 * self.sigma2)
            + log_normal_pdf(theta.mu, self.priors.mu_mean, self.priors.mu_var)
            + log_gamma_pdf(theta.psi, self.priors.psi_shape, self.priors.psi_rate)
            + log_normal_pdf(theta.xi, self.priors.xi_mean, self.priors.xi_var)
    }
}

/// Sum of GEV tail transforms used when reconstructing residuals; kept here
/// so callers share one definition of the per-observation transform.
#[inline]
pub fn tail_transform_at(beta_t: f64, xi: f64) -> f64 {
    let x = (-log_cdf_unchecked(beta_t)).max(f64::MIN_POSITIVE);
    gev_tail_transform(x, xi)
}
