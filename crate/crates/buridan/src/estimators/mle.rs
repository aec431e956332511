//! Likelihood-based estimation for the line model.
//!
//! The stationary position density is beta with shapes `tau01/v` and
//! `tau10/v`, so the negative log-likelihood of observed positions is a
//! smooth two-parameter surface. A coarse log-spaced grid guards against
//! bad starts; a Nelder-Mead refinement in log-parameter space polishes the
//! best grid point.

use super::{EstimationReport, Method, PairEstimates};
use crate::error::{Error, Result};
use crate::stats::{ln_beta, log_beta_density};

/// Search specification for [`mle_estimate`]: a `grid_points` x
/// `grid_points` log-spaced grid over `[tau_min, tau_max]^2`, then local
/// refinement to `refine_tol` in the parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub tau_min: f64,
    pub tau_max: f64,
    pub grid_points: usize,
    pub refine_tol: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            tau_min: 1e-4,
            tau_max: 0.5,
            grid_points: 40,
            refine_tol: 1e-6,
        }
    }
}

impl GridSpec {
    fn validate(&self) -> Result<()> {
        if !(self.tau_min > 0.0 && self.tau_max > self.tau_min) {
            return Err(Error::InvalidParameters(format!(
                "grid bounds ({}, {}) must satisfy 0 < min < max",
                self.tau_min, self.tau_max
            )));
        }
        if self.grid_points < 2 {
            return Err(Error::InvalidParameters(
                "grid needs at least 2 points per axis".into(),
            ));
        }
        if !(self.refine_tol > 0.0) {
            return Err(Error::InvalidParameters(
                "refine_tol must be positive".into(),
            ));
        }
        Ok(())
    }

    fn values(&self) -> Vec<f64> {
        let lo = self.tau_min.ln();
        let hi = self.tau_max.ln();
        let m = self.grid_points;
        (0..m)
            .map(|k| (lo + (hi - lo) * k as f64 / (m - 1) as f64).exp())
            .collect()
    }
}

/// Negative log-likelihood of positions under the stationary beta density
/// with candidate parameters `(tau01_hat, tau10_hat)` and known speed `v`.
/// Every position must lie strictly inside (0, 1).
pub fn negative_log_likelihood(
    positions: &[f64],
    tau01_hat: f64,
    tau10_hat: f64,
    v: f64,
) -> Result<f64> {
    if !(v > 0.0) {
        return Err(Error::Domain(format!("speed v = {v} must be positive")));
    }
    if !(tau01_hat > 0.0 && tau10_hat > 0.0) {
        return Err(Error::Domain(format!(
            "candidate parameters ({tau01_hat}, {tau10_hat}) must be positive"
        )));
    }
    let a = tau01_hat / v;
    let b = tau10_hat / v;
    let mut total = 0.0;
    for &x in positions {
        total -= log_beta_density(x, a, b)?;
    }
    Ok(total)
}

/// Sufficient-statistic form of the beta negative log-likelihood.
fn nll_from_sums(a: f64, b: f64, n: f64, sum_ln_x: f64, sum_ln_1mx: f64) -> f64 {
    -((a - 1.0) * sum_ln_x + (b - 1.0) * sum_ln_1mx - n * ln_beta(a, b))
}

/// Maximum-likelihood estimate of `(tau01, tau10)`.
///
/// Positions outside (0, 1) — possible under measurement noise — are
/// rejected before fitting and the excluded count is reported; the beta
/// density is undefined there and silently clamping would bias the fit.
pub fn mle_estimate(positions: &[f64], v: f64, grid: &GridSpec) -> Result<EstimationReport> {
    grid.validate()?;
    if !(v > 0.0) {
        return Err(Error::Domain(format!("speed v = {v} must be positive")));
    }
    let kept: Vec<f64> = positions
        .iter()
        .copied()
        .filter(|&x| x > 0.0 && x < 1.0)
        .collect();
    let excluded = positions.len() - kept.len();
    if kept.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "only {} usable positions after excluding {excluded} outside (0,1)",
            kept.len()
        )));
    }
    let n = kept.len() as f64;
    let sum_ln_x: f64 = kept.iter().map(|x| x.ln()).sum();
    let sum_ln_1mx: f64 = kept.iter().map(|x| (1.0 - x).ln()).sum();
    let nll = |tau01: f64, tau10: f64| nll_from_sums(tau01 / v, tau10 / v, n, sum_ln_x, sum_ln_1mx);

    let axis = grid.values();
    let mut best = (0usize, 0usize, f64::INFINITY);
    for (r, &t01) in axis.iter().enumerate() {
        for (c, &t10) in axis.iter().enumerate() {
            let val = nll(t01, t10);
            if val < best.2 {
                best = (r, c, val);
            }
        }
    }
    let on_boundary = best.0 == 0
        || best.0 == grid.grid_points - 1
        || best.1 == 0
        || best.1 == grid.grid_points - 1;

    // Refine from the best grid point in log-parameter space, which keeps
    // the candidates positive without constraints.
    let start = [axis[best.0].ln(), axis[best.1].ln()];
    let step = (grid.tau_max / grid.tau_min).ln() / (grid.grid_points - 1) as f64;
    let objective = |u: [f64; 2]| nll(u[0].exp(), u[1].exp());
    let refined = nelder_mead(objective, start, 0.5 * step, grid.refine_tol, 500);
    let (tau01, tau10) = (refined[0].exp(), refined[1].exp());

    let mut report = EstimationReport::new(
        Method::Mle,
        PairEstimates::from_pairs(2, [((0, 1), tau01), ((1, 0), tau10)]),
    );
    if excluded > 0 {
        report
            .warnings
            .push(format!("excluded {excluded} positions outside (0,1)"));
    }
    if on_boundary {
        report
            .warnings
            .push("grid minimum on the search boundary".into());
    }
    Ok(report)
}

/// Standard Nelder-Mead in two dimensions. Terminates when the simplex
/// diameter in the exponentiated parameters drops below `tol` or after
/// `max_iters` iterations.
fn nelder_mead(
    f: impl Fn([f64; 2]) -> f64,
    start: [f64; 2],
    step: f64,
    tol: f64,
    max_iters: usize,
) -> [f64; 2] {
    const ALPHA: f64 = 1.0; // reflection
    const GAMMA: f64 = 2.0; // expansion
    const RHO: f64 = 0.5; // contraction
    const SIGMA: f64 = 0.5; // shrink

    let mut simplex = [
        start,
        [start[0] + step, start[1]],
        [start[0], start[1] + step],
    ];
    let mut values = simplex.map(&f);

    for _ in 0..max_iters {
        // Order ascending by value.
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
        simplex = [simplex[order[0]], simplex[order[1]], simplex[order[2]]];
        values = [values[order[0]], values[order[1]], values[order[2]]];

        let diameter = simplex
            .iter()
            .flat_map(|a| {
                simplex.iter().map(move |b| {
                    let da = (a[0].exp() - b[0].exp()).abs();
                    let db = (a[1].exp() - b[1].exp()).abs();
                    da.max(db)
                })
            })
            .fold(0.0f64, f64::max);
        if diameter < tol {
            break;
        }

        let centroid = [
            0.5 * (simplex[0][0] + simplex[1][0]),
            0.5 * (simplex[0][1] + simplex[1][1]),
        ];
        let worst = simplex[2];
        let reflect = [
            centroid[0] + ALPHA * (centroid[0] - worst[0]),
            centroid[1] + ALPHA * (centroid[1] - worst[1]),
        ];
        let f_reflect = f(reflect);

        if f_reflect < values[0] {
            let expand = [
                centroid[0] + GAMMA * (reflect[0] - centroid[0]),
                centroid[1] + GAMMA * (reflect[1] - centroid[1]),
            ];
            let f_expand = f(expand);
            if f_expand < f_reflect {
                simplex[2] = expand;
                values[2] = f_expand;
            } else {
                simplex[2] = reflect;
                values[2] = f_reflect;
            }
        } else if f_reflect < values[1] {
            simplex[2] = reflect;
            values[2] = f_reflect;
        } else {
            let contract = [
                centroid[0] + RHO * (worst[0] - centroid[0]),
                centroid[1] + RHO * (worst[1] - centroid[1]),
            ];
            let f_contract = f(contract);
            if f_contract < values[2] {
                simplex[2] = contract;
                values[2] = f_contract;
            } else {
                for k in 1..3 {
                    simplex[k] = [
                        simplex[0][0] + SIGMA * (simplex[k][0] - simplex[0][0]),
                        simplex[0][1] + SIGMA * (simplex[k][1] - simplex[0][1]),
                    ];
                    values[k] = f(simplex[k]);
                }
            }
        }
    }

    let mut best = 0;
    for k in 1..3 {
        if values[k] < values[best] {
            best = k;
        }
    }
    simplex[best]
}
