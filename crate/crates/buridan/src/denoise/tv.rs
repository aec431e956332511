//! Total-variation denoising by split-Bregman iteration.
//!
//! Minimizes `gamma/2 ||xhat - x||^2 + ||grad xhat||_1` where `grad` is the
//! forward-difference operator with a zero first row. The l1 term is split
//! onto an auxiliary variable `d` with Bregman variable `b`; each sweep
//! alternates a tridiagonal solve for `xhat`, a coordinatewise shrink for
//! `d`, and the Bregman update.

use super::Signal1D;
use crate::error::{Error, Result};

/// Split-Bregman parameters: `gamma` weighs the data-fit term, `lambda` the
/// splitting constraint, `n_iters` the number of sweeps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TvConfig {
    pub gamma: f64,
    pub lambda: f64,
    pub n_iters: usize,
    /// Solve `(gamma I + grad^T grad)` instead of the stationarity-consistent
    /// `(gamma I + lambda grad^T grad)` in the quadratic step. Off by
    /// default; kept for comparison.
    pub unscaled_laplacian: bool,
}

impl Default for TvConfig {
    fn default() -> Self {
        Self {
            gamma: 0.5,
            lambda: 20.0,
            n_iters: 10,
            unscaled_laplacian: false,
        }
    }
}

impl TvConfig {
    fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.lambda > 0.0) {
            return Err(Error::InvalidParameters(format!(
                "gamma = {} and lambda = {} must be positive",
                self.gamma, self.lambda
            )));
        }
        if self.n_iters == 0 {
            return Err(Error::InvalidParameters("n_iters must be positive".into()));
        }
        Ok(())
    }
}

/// Soft-threshold: `sign(x) * max(|x| - delta, 0)`, with `shrink(0, d) = 0`.
pub fn shrink(x: f64, delta: f64) -> f64 {
    if x > delta {
        x - delta
    } else if x < -delta {
        x + delta
    } else {
        0.0
    }
}

/// Forward difference with zero first entry.
fn gradient(x: &[f64], out: &mut [f64]) {
    out[0] = 0.0;
    for i in 1..x.len() {
        out[i] = x[i] - x[i - 1];
    }
}

/// Adjoint of [`gradient`].
fn gradient_transpose(y: &[f64], out: &mut [f64]) {
    let n = y.len();
    for j in 0..n {
        let own = if j >= 1 { y[j] } else { 0.0 };
        let next = if j + 1 < n { y[j + 1] } else { 0.0 };
        out[j] = own - next;
    }
}

/// The objective `gamma/2 ||candidate - original||^2 + ||grad candidate||_1`.
pub fn tv_objective(candidate: &[f64], original: &[f64], gamma: f64) -> f64 {
    let fit: f64 = candidate
        .iter()
        .zip(original)
        .map(|(c, o)| (c - o) * (c - o))
        .sum();
    let tv: f64 = candidate.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    0.5 * gamma * fit + tv
}

/// Thomas algorithm for the constant-coefficient tridiagonal system
/// `(gamma I + scale L) xhat = rhs`, where `L` is the path-graph Laplacian
/// (diagonal 1, 2, ..., 2, 1; off-diagonals -1).
fn solve_regularized_laplacian(gamma: f64, scale: f64, rhs: &[f64], out: &mut [f64]) {
    let n = rhs.len();
    let off = -scale;
    let diag =
        |j: usize| -> f64 { gamma + scale * if j == 0 || j == n - 1 { 1.0 } else { 2.0 } };
    let mut c_prime = vec![0.0; n];
    let mut d_prime = vec![0.0; n];
    c_prime[0] = off / diag(0);
    d_prime[0] = rhs[0] / diag(0);
    for j in 1..n {
        let denom = diag(j) - off * c_prime[j - 1];
        c_prime[j] = off / denom;
        d_prime[j] = (rhs[j] - off * d_prime[j - 1]) / denom;
    }
    out[n - 1] = d_prime[n - 1];
    for j in (0..n - 1).rev() {
        out[j] = d_prime[j] - c_prime[j] * out[j + 1];
    }
}

/// Split-Bregman total-variation denoising of a one-dimensional signal.
pub fn tv_denoise(signal: &Signal1D, config: &TvConfig) -> Result<Signal1D> {
    config.validate()?;
    let x = &signal.values;
    let n = x.len();
    let mut d = vec![0.0; n];
    let mut b = vec![0.0; n];
    let mut xhat = vec![0.0; n];
    let mut grad = vec![0.0; n];
    let mut diff = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    let scale = if config.unscaled_laplacian {
        1.0
    } else {
        config.lambda
    };
    for _ in 0..config.n_iters {
        for j in 0..n {
            diff[j] = d[j] - b[j];
        }
        gradient_transpose(&diff, &mut rhs);
        for j in 0..n {
            rhs[j] = config.lambda * rhs[j] + config.gamma * x[j];
        }
        solve_regularized_laplacian(config.gamma, scale, &rhs, &mut xhat);
        gradient(&xhat, &mut grad);
        for j in 0..n {
            d[j] = shrink(grad[j] + b[j], 1.0 / config.lambda);
            b[j] += grad[j] - d[j];
        }
    }
    Ok(Signal1D {
        values: xhat,
        dt: signal.dt,
    })
}
