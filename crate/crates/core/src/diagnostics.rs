//! Posterior summaries and mixing diagnostics: quantiles, autocorrelation,
//! inefficiency factors, histogram/density tables, and the beta-path
//! extremeness classification against standard normal quantiles.

use crate::error::{Error, Result};
use crate::gibbs::ChainDraws;
use crate::special::{inv_cdf_unchecked, log_sum_exp};

/// Default truncation lag M for the inefficiency factor.
pub const DEFAULT_IF_BATCH: usize = 500;

/// Summary line for one scalar parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub name: String,
    pub median: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub inefficiency: f64,
}

/// Per-time-step summary of the latent path draws.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaSummary {
    pub median: Vec<f64>,
    pub q025: Vec<f64>,
    pub q975: Vec<f64>,
    /// True where the median or either CI bound crosses the 0.995/0.005
    /// standard normal lines.
    pub extreme: Vec<bool>,
    /// Reference quantiles: Phi^{-1}(0.005), (0.025), (0.975), (0.995).
    pub reference_lines: [f64; 4],
}

/// Full summary: one row per static parameter plus the latent-path table.
#[derive(Debug, Clone)]
pub struct Summary {
    pub rows: Vec<SummaryRow>,
    pub beta: Option<BetaSummary>,
}

/// Histogram plus kernel density table for one parameter's draws.
#[derive(Debug, Clone)]
pub struct HistDensity {
    /// Bin edges (51 values for the 50 equal-width bins).
    pub edges: Vec<f64>,
    /// Relative frequency per bin (sums to 1).
    pub frequency: Vec<f64>,
    /// Gaussian KDE evaluated at bin midpoints, bandwidth 1.06 sd n^{-1/5}.
    pub density: Vec<f64>,
}

/// Autocorrelation function rho_0..rho_max_lag with the standard
/// sum-of-products estimator; rho_0 = 1.
pub fn acf(x: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    if max_lag < 1 || x.len() <= max_lag {
        return Err(Error::InvalidParams(format!(
            "need length > max_lag >= 1, got n={} max_lag={max_lag}",
            x.len()
        )));
    }
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let denom: f64 = x.iter().map(|v| (v - mean) * (v - mean)).sum();
    if denom <= 0.0 {
        return Err(Error::ZeroVariance("acf of a constant sequence".into()));
    }
    let mut rho = Vec::with_capacity(max_lag + 1);
    for s in 0..=max_lag {
        let num: f64 = (0..n - s).map(|i| (x[i] - mean) * (x[i + s] - mean)).sum();
        rho.push(num / denom);
    }
    Ok(rho)
}

/// Inefficiency factor 1 + 2 sum_{s=1}^{M} (1 - s/M) rho_s with Bartlett
/// window M = `batch`.
pub fn inefficiency_factor(x: &[f64], batch: usize) -> Result<f64> {
    if x.len() <= batch {
        return Err(Error::InvalidParams(format!(
            "need length > batch, got n={} batch={batch}",
            x.len()
        )));
    }
    let rho = acf(x, batch)?;
    let m = batch as f64;
    let sum: f64 = (1..=batch).map(|s| (1.0 - s as f64 / m) * rho[s]).sum();
    Ok(1.0 + 2.0 * sum)
}

/// Type-7 quantile (linear interpolation of order statistics) of unsorted
/// data. `p` must lie in [0, 1].
pub fn quantile(x: &[f64], p: f64) -> f64 {
    let mut sorted = x.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    quantile_sorted(&sorted, p)
}

/// Type-7 quantile of already-sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    debug_assert!((0.0..=1.0).contains(&p));
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n as f64 - 1.0) * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

fn summary_row(name: &str, draws: &[f64]) -> SummaryRow {
    let mut sorted = draws.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let batch = DEFAULT_IF_BATCH.min(draws.len().saturating_sub(1)).max(1);
    let inefficiency = inefficiency_factor(draws, batch).unwrap_or(f64::NAN);
    SummaryRow {
        name: name.to_string(),
        median: quantile_sorted(&sorted, 0.5),
        ci_low: quantile_sorted(&sorted, 0.025),
        ci_high: quantile_sorted(&sorted, 0.975),
        inefficiency,
    }
}

/// Standard normal reference lines at probabilities 0.005, 0.025, 0.975, 0.995.
pub fn beta_reference_lines() -> [f64; 4] {
    [
        inv_cdf_unchecked(0.005),
        inv_cdf_unchecked(0.025),
        inv_cdf_unchecked(0.975),
        inv_cdf_unchecked(0.995),
    ]
}

/// Summarize the latent-path draws: per-t median and 95% interval plus the
/// extremeness flag against the 0.995/0.005 standard normal lines.
pub fn summarize_beta(beta_draws: &[Vec<f64>]) -> Option<BetaSummary> {
    let n_draws = beta_draws.len();
    if n_draws == 0 {
        return None;
    }
    let t_len = beta_draws[0].len();
    let lines = beta_reference_lines();
    let extreme_line = lines[3];
    let mut median = Vec::with_capacity(t_len);
    let mut q025 = Vec::with_capacity(t_len);
    let mut q975 = Vec::with_capacity(t_len);
    let mut extreme = Vec::with_capacity(t_len);
    let mut col = vec![0.0; n_draws];
    for t in 0..t_len {
        for (i, draw) in beta_draws.iter().enumerate() {
            col[i] = draw[t];
        }
        col.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let med = quantile_sorted(&col, 0.5);
        let lo = quantile_sorted(&col, 0.025);
        let hi = quantile_sorted(&col, 0.975);
        extreme.push(med.abs() > extreme_line || lo.abs() > extreme_line || hi.abs() > extreme_line);
        median.push(med);
        q025.push(lo);
        q975.push(hi);
    }
    Some(BetaSummary { median, q025, q975, extreme, reference_lines: lines })
}

/// Posterior medians, 95% intervals and inefficiency factors for every stored
/// parameter, plus the per-t beta summary from the thinned latent draws.
pub fn summarize(draws: &ChainDraws) -> Summary {
    let mut rows = vec![
        summary_row("mu", &draws.mu),
        summary_row("psi", &draws.psi),
        summary_row("xi", &draws.xi),
        summary_row("phi", &draws.phi),
    ];
    if let (Some(a1), Some(a2)) = (&draws.a1, &draws.a2) {
        rows.push(summary_row("a1", a1));
        rows.push(summary_row("a2", a2));
    }
    rows.push(summary_row("sigma", &draws.sigma));
    Summary { rows, beta: summarize_beta(&draws.beta) }
}

/// 50-bin histogram plus Gaussian kernel density table.
pub fn histogram_density(x: &[f64]) -> Result<HistDensity> {
    const BINS: usize = 50;
    if x.len() < 2 {
        return Err(Error::InvalidParams("histogram needs at least 2 values".into()));
    }
    let n = x.len() as f64;
    let (lo, hi) = x
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    let sd = var.sqrt();
    if !(sd > 0.0) || hi <= lo {
        return Err(Error::ZeroVariance("histogram of a constant sequence".into()));
    }
    let width = (hi - lo) / BINS as f64;
    let mut frequency = vec![0.0; BINS];
    for &v in x {
        let i = (((v - lo) / width) as usize).min(BINS - 1);
        frequency[i] += 1.0 / n;
    }
    let edges: Vec<f64> = (0..=BINS).map(|i| lo + i as f64 * width).collect();
    let bw = 1.06 * sd * n.powf(-0.2);
    let density = (0..BINS)
        .map(|i| {
            let center = lo + (i as f64 + 0.5) * width;
            let logs: Vec<f64> = x
                .iter()
                .map(|&v| {
                    let z = (center - v) / bw;
                    -0.5 * z * z - crate::special::LN_SQRT_2PI
                })
                .collect();
            (log_sum_exp(&logs) - (n * bw).ln()).exp()
        })
        .collect();
    Ok(HistDensity { edges, frequency, density })
}

// --- Kolmogorov-Smirnov utilities ------------------------------------------
//
// These back both run-time sanity checks and the oracle-style tests in the
// acceptance suite.

/// One-sample KS statistic of `x` against the CDF closure `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(x: &[f64], cdf: F) -> f64 {
    let mut sorted = x.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &v) in sorted.iter().enumerate() {
        let f = cdf(v);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    d
}

/// Two-sample KS statistic.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_by(|x, y| x.partial_cmp(y).unwrap());
    sb.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (na, nb) = (sa.len(), sb.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < na && j < nb {
        let va = sa[i];
        let vb = sb[j];
        if va <= vb {
            i += 1;
        }
        if vb <= va {
            j += 1;
        }
        d = d.max((i as f64 / na as f64 - j as f64 / nb as f64).abs());
    }
    d
}

/// Asymptotic Kolmogorov p-value for a one-sample statistic at sample size n.
pub fn ks_p_value(d: f64, n: usize) -> f64 {
    let n = n as f64;
    let lambda = (n.sqrt() + 0.12 + 0.11 / n.sqrt()) * d;
    kolmogorov_sf(lambda)
}

/// Asymptotic p-value for a two-sample statistic.
pub fn ks_two_sample_p_value(d: f64, n1: usize, n2: usize) -> f64 {
    let ne = (n1 * n2) as f64 / (n1 + n2) as f64;
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    kolmogorov_sf(lambda)
}

fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k as f64) * (k as f64) * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}
