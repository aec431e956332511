//! Locally weighted polynomial regression.
//!
//! For each sample, a low-degree polynomial is fit by weighted least squares
//! over the nearest `ceil(h * N)` samples with tricube weights
//! `(1 - (d/d_max)^3)^3`, and the fit's value at the sample replaces it.
//! Windows truncate at the signal boundaries, so edge windows are
//! one-sided.

use super::Signal1D;
use crate::error::{Error, Result};

/// Smooths `signal` with polynomials of the given degree; `h` in (0, 1] is
/// the fraction of all samples inside each local window.
pub fn lwpr_smooth(signal: &Signal1D, h: f64, degree: usize) -> Result<Signal1D> {
    if !(h > 0.0 && h <= 1.0) {
        return Err(Error::InvalidParameters(format!(
            "smoothing fraction h = {h} outside (0,1]"
        )));
    }
    let n = signal.values.len();
    let k = (h * n as f64).ceil() as usize;
    if k < degree + 1 {
        return Err(Error::InvalidParameters(format!(
            "window of {k} samples cannot fit a degree-{degree} polynomial"
        )));
    }
    let values = &signal.values;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let (lo, hi) = nearest_window(i, n, k);
        out.push(fit_at_center(values, i, lo, hi, degree, signal.dt));
    }
    Ok(Signal1D {
        values: out,
        dt: signal.dt,
    })
}

/// Inclusive index range of the `k` samples nearest to `i`, preferring the
/// earlier side on ties.
fn nearest_window(i: usize, n: usize, k: usize) -> (usize, usize) {
    let mut lo = i;
    let mut hi = i;
    while hi - lo + 1 < k {
        let left_dist = if lo > 0 { i - (lo - 1) } else { usize::MAX };
        let right_dist = if hi + 1 < n { (hi + 1) - i } else { usize::MAX };
        if left_dist <= right_dist {
            lo -= 1;
        } else {
            hi += 1;
        }
    }
    (lo, hi)
}

/// Weighted least-squares polynomial fit over `values[lo..=hi]`, evaluated
/// at sample `i`. Abscissas are centered on `i` and scaled to [-1, 1] for
/// conditioning, so the fit's value at `i` is the constant coefficient.
fn fit_at_center(values: &[f64], i: usize, lo: usize, hi: usize, degree: usize, dt: f64) -> f64 {
    if lo == hi {
        return values[i];
    }
    let d_max = ((hi - i).max(i - lo)) as f64 * dt;
    let dim = degree + 1;
    let mut normal = vec![vec![0.0; dim]; dim];
    let mut rhs = vec![0.0; dim];
    for j in lo..=hi {
        let d = (j as f64 - i as f64).abs() * dt;
        let ratio = d / d_max;
        // Floor keeps the window's farthest points from dropping out
        // entirely, which would make small windows singular.
        let w = (1.0 - ratio.powi(3)).powi(3).max(1e-9);
        let u = (j as f64 - i as f64) * dt / d_max;
        let mut powers = vec![1.0; dim];
        for p in 1..dim {
            powers[p] = powers[p - 1] * u;
        }
        for r in 0..dim {
            for c in 0..dim {
                normal[r][c] += w * powers[r] * powers[c];
            }
            rhs[r] += w * powers[r] * values[j];
        }
    }
    let coeffs = solve_dense(normal, rhs);
    coeffs[0]
}

/// Gaussian elimination with partial pivoting; the systems here are tiny
/// (degree + 1 square).
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&r, &s| a[r][col].abs().partial_cmp(&a[s][col].abs()).unwrap())
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            for c in col..n {
                a[row][c] -= factor * a[col][c];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut v = b[row];
        for c in row + 1..n {
            v -= a[row][c] * x[c];
        }
        x[row] = v / a[row][row];
    }
    x
}
