//! Mode finding and Laplace (second-order Taylor) approximation of
//! conditional log posteriors, plus the independence Metropolis-Hastings step
//! built on the resulting Gaussian proposal.
//!
//! The optimizer is a BFGS quasi-Newton method with central-difference
//! gradients; the Hessian at the mode also comes from central differences.
//! The dimensions here are tiny (1 for phi, 3 for the theta block), so
//! the linear algebra is hand-rolled.

use crate::error::{Error, Result};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Dense square matrix in row-major order; only small dimensions are used.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n);
            for (j, &v) in row.iter().enumerate() {
                m.set(i, j, v);
            }
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    /// Lower Cholesky factor, or None when the matrix is not positive
    /// definite (or contains non-finite entries).
    pub fn cholesky(&self) -> Option<SquareMatrix> {
        let n = self.n;
        let mut l = SquareMatrix::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                let mut sum = self.get(i, j);
                for k in 0..j {
                    sum -= l.get(i, k) * l.get(j, k);
                }
                if i == j {
                    if !(sum > 0.0) || !sum.is_finite() {
                        return None;
                    }
                    l.set(i, i, sum.sqrt());
                } else {
                    l.set(i, j, sum / l.get(j, j));
                }
            }
        }
        Some(l)
    }
}

/// Solve L x = b for lower-triangular L.
fn forward_solve(l: &SquareMatrix, b: &[f64]) -> Vec<f64> {
    let n = l.n();
    let mut x = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for j in 0..i {
            s -= l.get(i, j) * x[j];
        }
        x[i] = s / l.get(i, i);
    }
    x
}

/// Solve L^T x = b for lower-triangular L.
fn backward_solve(l: &SquareMatrix, b: &[f64]) -> Vec<f64> {
    let n = l.n();
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = b[i];
        for j in i + 1..n {
            s -= l.get(j, i) * x[j];
        }
        x[i] = s / l.get(i, i);
    }
    x
}

/// Gaussian proposal built from a posterior mode and curvature.
#[derive(Debug, Clone)]
pub struct LaplaceProposal {
    pub mean: Vec<f64>,
    /// Covariance = (negative Hessian)^{-1}, after any ridge repair.
    pub covariance: SquareMatrix,
    /// Log determinant of the covariance.
    pub log_det: f64,
    /// Ridge added to the negative Hessian before it factorized (0 if none).
    pub ridge: f64,
    /// Cholesky factor of the precision (the repaired negative Hessian).
    precision_chol: SquareMatrix,
}

impl LaplaceProposal {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Draw from N(mean, covariance).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let z: Vec<f64> = (0..self.dim()).map(|_| StandardNormal.sample(rng)).collect();
        // cov = P^{-1} = L^{-T} L^{-1}, so mean + L^{-T} z has the right law.
        let u = backward_solve(&self.precision_chol, &z);
        self.mean.iter().zip(u).map(|(m, v)| m + v).collect()
    }

    /// Log density of the proposal at `x`.
    pub fn log_density(&self, x: &[f64]) -> f64 {
        let d: Vec<f64> = x.iter().zip(&self.mean).map(|(a, b)| a - b).collect();
        // Quadratic form d' P d via P = L L': q = |L' d|^2.
        let n = self.dim();
        let mut q = 0.0;
        for i in 0..n {
            let mut s = 0.0;
            for j in i..n {
                s += self.precision_chol.get(j, i) * d[j];
            }
            q += s * s;
        }
        -0.5 * (n as f64) * (2.0 * std::f64::consts::PI).ln() - 0.5 * self.log_det - 0.5 * q
    }
}

/// Result of a mode search: the maximizer, curvature and gradient there.
#[derive(Debug, Clone)]
pub struct ModeFit {
    pub point: Vec<f64>,
    pub value: f64,
    pub gradient: Vec<f64>,
    pub neg_hessian: SquareMatrix,
    pub iterations: usize,
    pub grad_norm: f64,
}

/// Tuning constants for the mode search.
#[derive(Debug, Clone, Copy)]
pub struct OptimOptions {
    pub max_iter: usize,
    /// Relative step for central-difference gradients.
    pub grad_step: f64,
    /// Relative step for the central-difference Hessian.
    pub hess_step: f64,
    /// Absolute gradient tolerance; scaled up by 1e-9 |f| for large objectives.
    pub grad_tol: f64,
}

impl Default for OptimOptions {
    fn default() -> Self {
        Self { max_iter: 200, grad_step: 3e-6, hess_step: 1e-4, grad_tol: 1e-6 }
    }
}

fn central_gradient<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64], rel_step: f64) -> Vec<f64> {
    let mut g = vec![0.0; x.len()];
    let mut xp = x.to_vec();
    for i in 0..x.len() {
        let h = rel_step * (1.0 + x[i].abs());
        xp[i] = x[i] + h;
        let fp = f(&xp);
        xp[i] = x[i] - h;
        let fm = f(&xp);
        xp[i] = x[i];
        g[i] = (fp - fm) / (2.0 * h);
    }
    g
}

/// Central-difference Hessian, symmetrized as (H + H')/2 by construction.
fn central_hessian<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64], rel_step: f64) -> SquareMatrix {
    let n = x.len();
    let f0 = f(x);
    let h: Vec<f64> = x.iter().map(|v| rel_step * (1.0 + v.abs())).collect();
    let mut hess = SquareMatrix::zeros(n);
    let mut xp = x.to_vec();
    for i in 0..n {
        xp[i] = x[i] + h[i];
        let fp = f(&xp);
        xp[i] = x[i] - h[i];
        let fm = f(&xp);
        xp[i] = x[i];
        hess.set(i, i, (fp - 2.0 * f0 + fm) / (h[i] * h[i]));
        for j in 0..i {
            xp[i] = x[i] + h[i];
            xp[j] = x[j] + h[j];
            let fpp = f(&xp);
            xp[j] = x[j] - h[j];
            let fpm = f(&xp);
            xp[i] = x[i] - h[i];
            let fmm = f(&xp);
            xp[j] = x[j] + h[j];
            let fmp = f(&xp);
            xp[i] = x[i];
            xp[j] = x[j];
            let v = (fpp - fpm - fmp + fmm) / (4.0 * h[i] * h[j]);
            hess.set(i, j, v);
            hess.set(j, i, v);
        }
    }
    hess
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Maximize `logpost` from `init` with BFGS and numerical derivatives.
///
/// Returns the maximizer together with the central-difference negative
/// Hessian and the gradient there. Non-convergence after `max_iter`
/// iterations is an error carrying the best point found, so callers can
/// still build a (gradient-corrected) proposal from it.
pub fn find_mode<F: Fn(&[f64]) -> f64>(
    logpost: F,
    init: &[f64],
    opts: &OptimOptions,
) -> Result<ModeFit> {
    let n = init.len();
    let neg = |x: &[f64]| -logpost(x);
    let mut x = init.to_vec();
    let mut fx = neg(&x);
    if !fx.is_finite() {
        return Err(Error::NonFiniteObjective { iteration: 0 });
    }
    let mut g = central_gradient(&neg, &x, opts.grad_step);
    // Inverse-Hessian approximation.
    let mut h_inv = SquareMatrix::identity(n);
    let mut iterations = 0usize;

    // Working-scale tolerance: central-difference gradients carry noise
    // proportional to the objective's magnitude, so the absolute tolerance
    // only binds for O(1) objectives.
    let tol_at = |fv: f64| opts.grad_tol.max(3e-9 * fv.abs());

    while iterations < opts.max_iter && inf_norm(&g) > tol_at(fx) {
        iterations += 1;
        // Search direction d = -H g.
        let mut d = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                d[i] -= h_inv.get(i, j) * g[j];
            }
        }
        let mut slope: f64 = d.iter().zip(&g).map(|(a, b)| a * b).sum();
        if !(slope < 0.0) {
            h_inv = SquareMatrix::identity(n);
            for i in 0..n {
                d[i] = -g[i];
            }
            slope = -g.iter().map(|v| v * v).sum::<f64>();
        }

        // Armijo backtracking; non-finite objective values reject the step.
        let mut alpha = 1.0;
        let mut x_new = x.clone();
        let mut f_new = f64::INFINITY;
        let mut ok = false;
        for _ in 0..60 {
            for i in 0..n {
                x_new[i] = x[i] + alpha * d[i];
            }
            f_new = neg(&x_new);
            if f_new.is_finite() && f_new <= fx + 1e-4 * alpha * slope {
                ok = true;
                break;
            }
            alpha *= 0.5;
        }
        if !ok {
            break; // step collapse; report at the best point found
        }

        let g_new = central_gradient(&neg, &x_new, opts.grad_step);
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy: f64 = s.iter().zip(&yv).map(|(a, b)| a * b).sum();
        if sy > 1e-12 {
            // BFGS update of the inverse Hessian.
            let rho = 1.0 / sy;
            let mut hy = vec![0.0; n];
            for i in 0..n {
                for j in 0..n {
                    hy[i] += h_inv.get(i, j) * yv[j];
                }
            }
            let yhy: f64 = yv.iter().zip(&hy).map(|(a, b)| a * b).sum();
            for i in 0..n {
                for j in 0..n {
                    let v = h_inv.get(i, j) - rho * (s[i] * hy[j] + hy[i] * s[j])
                        + rho * (1.0 + rho * yhy) * s[i] * s[j];
                    h_inv.set(i, j, v);
                }
            }
        }
        x = x_new;
        fx = f_new;
        g = g_new;
    }

    let gradient: Vec<f64> = g.iter().map(|v| -v).collect();
    let grad_norm = inf_norm(&gradient);
    // Negative Hessian of logpost = Hessian of the negated objective.
    let neg_hessian = central_hessian(&neg, &x, opts.hess_step);
    let fit = ModeFit {
        point: x,
        value: -fx,
        gradient,
        neg_hessian,
        iterations,
        grad_norm,
    };
    if grad_norm > tol_at(fx) {
        return Err(Error::ModeSearch {
            iterations,
            grad_norm,
            best: Box::new(fit),
        });
    }
    Ok(fit)
}

/// Build the MVN proposal from a mode, its negative Hessian, and the gradient
/// there: covariance = neg_hessian^{-1}, mean = mode + covariance * gradient.
///
/// A non-PD negative Hessian is repaired with a doubling ridge starting at
/// 1e-8 (relative to the largest diagonal); if no ridge up to 1e8x succeeds
/// the proposal is reported singular so the caller can fall back.
pub fn build_proposal(
    mode: &[f64],
    neg_hessian: &SquareMatrix,
    gradient_at_mode: &[f64],
) -> Result<LaplaceProposal> {
    let n = neg_hessian.n();
    assert_eq!(mode.len(), n);
    assert_eq!(gradient_at_mode.len(), n);

    let diag_scale = (0..n)
        .map(|i| neg_hessian.get(i, i).abs())
        .fold(1.0f64, f64::max);
    let mut ridge = 0.0;
    let mut repaired = neg_hessian.clone();
    let chol = loop {
        if let Some(l) = repaired.cholesky() {
            break l;
        }
        ridge = if ridge == 0.0 { 1e-8 * diag_scale } else { ridge * 2.0 };
        if ridge > 1e8 * diag_scale || !ridge.is_finite() {
            return Err(Error::SingularProposal);
        }
        repaired = neg_hessian.clone();
        for i in 0..n {
            repaired.set(i, i, neg_hessian.get(i, i) + ridge);
        }
    };

    // covariance = P^{-1} column by column.
    let mut covariance = SquareMatrix::zeros(n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let col = backward_solve(&chol, &forward_solve(&chol, &e));
        for i in 0..n {
            covariance.set(i, j, col[i]);
        }
    }
    // Symmetrize away solve round-off.
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (covariance.get(i, j) + covariance.get(j, i));
            covariance.set(i, j, v);
            covariance.set(j, i, v);
        }
    }

    let log_det = -2.0 * (0..n).map(|i| chol.get(i, i).ln()).sum::<f64>();
    let mean: Vec<f64> = {
        let shift = backward_solve(&chol, &forward_solve(&chol, gradient_at_mode));
        mode.iter().zip(shift).map(|(m, s)| m + s).collect()
    };
    Ok(LaplaceProposal { mean, covariance, log_det, ridge, precision_chol: chol })
}

/// One independence Metropolis-Hastings step.
///
/// Draws from the proposal and accepts with probability
/// min{1, pi(x*) q(x) / (pi(x) q(x*))} in log domain. Off-support proposals
/// (logpost = -inf) are rejected with probability one.
pub fn mh_independence_step<F: Fn(&[f64]) -> f64, R: Rng + ?Sized>(
    current: &[f64],
    logpost: F,
    proposal: &LaplaceProposal,
    rng: &mut R,
) -> (Vec<f64>, bool) {
    let candidate = proposal.sample(rng);
    let lp_cur = logpost(current);
    let lp_cand = logpost(&candidate);
    if !lp_cand.is_finite() {
        return (current.to_vec(), false);
    }
    let log_ratio = (lp_cand - lp_cur) - (proposal.log_density(&candidate) - proposal.log_density(current));
    let u: f64 = rng.random();
    if u.ln() < log_ratio {
        (candidate, true)
    } else {
        (current.to_vec(), false)
    }
}
