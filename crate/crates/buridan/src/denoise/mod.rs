//! Noise-robust state detection.
//!
//! Measurement noise makes the raw motion-direction detector over-detect
//! transitions, so estimation on noisy observations goes through one of two
//! routes: a sliding-window linear-regression detector, or denoising each
//! coordinate first and then running the plain geometric detector. The
//! denoisers are locally weighted polynomial regression, sym8 wavelet soft
//! thresholding, a lowpass Butterworth cascade, and split-Bregman total
//! variation.

mod butterworth;
mod lwpr;
mod tv;
mod wavelet;

pub use butterworth::{butterworth_lowpass, design_lowpass, Biquad, ButterworthConfig};
pub use lwpr::lwpr_smooth;
pub use tv::{shrink, tv_denoise, tv_objective, TvConfig};
pub use wavelet::{dwt_forward, dwt_inverse, wavelet_denoise, WaveletPyramid, SYM8_LO};

use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{
    best_aligned_target, detect_states_polygon, estimate_taus_from_states, EstimationReport,
    Method, PairEstimates, StateSequence,
};
use crate::sim::PolygonTargets;
use crate::stats::fit_slope;

/// A uniformly sampled one-dimensional signal.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal1D {
    pub values: Vec<f64>,
    pub dt: f64,
}

impl Signal1D {
    pub fn new(values: Vec<f64>, dt: f64) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "signal needs at least 2 samples, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameters(
                "signal contains a non-finite value".into(),
            ));
        }
        if !(dt > 0.0) {
            return Err(Error::InvalidParameters(format!(
                "sample spacing {dt} must be positive"
            )));
        }
        Ok(Self { values, dt })
    }

    /// Unit sample spacing.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        Self::new(values, 1.0)
    }
}

/// State detection through windowed linear regression.
///
/// For each start index, least-squares slopes of x and y over the next
/// `window` steps (fewer near the end) form the motion direction, anchored
/// at the window centroid; the best-aligned target wins. Windows with fewer
/// than two points carry the previous state. `window = 1` reduces to the
/// plain two-point detector.
pub fn regression_state_detect(
    positions: &[[f64; 2]],
    targets: &PolygonTargets,
    window: usize,
) -> Result<StateSequence> {
    if window == 0 {
        return Err(Error::InvalidParameters("window must be positive".into()));
    }
    if positions.len() < 2 {
        return Err(Error::InsufficientData(
            "state detection needs at least 2 positions".into(),
        ));
    }
    let n = positions.len();
    let mut states = Vec::with_capacity(n);
    let mut prev = 0usize;
    for j in 0..n {
        let end = (j + window).min(n - 1);
        let span = end - j + 1;
        let state = if span < 2 {
            prev
        } else {
            let ts: Vec<f64> = (0..span).map(|k| k as f64).collect();
            let xs: Vec<f64> = positions[j..=end].iter().map(|p| p[0]).collect();
            let ys: Vec<f64> = positions[j..=end].iter().map(|p| p[1]).collect();
            let a = [
                fit_slope(&ts, &xs).expect("span >= 2"),
                fit_slope(&ts, &ys).expect("span >= 2"),
            ];
            let centroid = [
                xs.iter().sum::<f64>() / span as f64,
                ys.iter().sum::<f64>() / span as f64,
            ];
            best_aligned_target(a, centroid, targets).unwrap_or(prev)
        };
        states.push(state);
        prev = state;
    }
    StateSequence::new(states, targets.len())
}

/// Magnitude of the discrete Fourier transform, one value per bin
/// `0..n_samples`.
pub fn dft_magnitude(signal: &Signal1D) -> Vec<f64> {
    let n = signal.values.len();
    let mut buffer: Vec<Complex<f64>> = signal
        .values
        .iter()
        .map(|&x| Complex::new(x, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buffer);
    buffer.iter().map(|c| c.norm()).collect()
}

/// Which noise-handling route to run before counting transitions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DenoiseMethod {
    /// Windowed linear-regression detector on the raw observations.
    Regression { window: usize },
    /// Locally weighted polynomial regression per coordinate.
    Lwpr { h: f64, degree: usize },
    /// sym8 wavelet soft thresholding per coordinate.
    Wavelet { levels: usize },
    /// Lowpass Butterworth per coordinate.
    Butterworth { order: usize, cutoff_bins: f64 },
    /// Split-Bregman total variation per coordinate.
    Tv {
        gamma: f64,
        lambda: f64,
        n_iters: usize,
    },
}

impl DenoiseMethod {
    pub fn label(&self) -> String {
        match self {
            DenoiseMethod::Regression { window } => format!("regression_w{window}"),
            DenoiseMethod::Lwpr { h, degree } => format!("lwpr_h{h}_d{degree}"),
            DenoiseMethod::Wavelet { levels } => format!("wavelet_sym8_l{levels}"),
            DenoiseMethod::Butterworth { order, cutoff_bins } => {
                format!("butterworth_o{order}_c{cutoff_bins}")
            }
            DenoiseMethod::Tv {
                gamma,
                lambda,
                n_iters,
            } => format!("tv_g{gamma}_l{lambda}_n{n_iters}"),
        }
    }

    /// Applies the denoiser to one coordinate. [`DenoiseMethod::Regression`]
    /// is a detector, not a denoiser, and is rejected here.
    pub fn apply(&self, signal: &Signal1D) -> Result<Signal1D> {
        match *self {
            DenoiseMethod::Regression { .. } => Err(Error::InvalidParameters(
                "regression is a detector, not a per-coordinate denoiser".into(),
            )),
            DenoiseMethod::Lwpr { h, degree } => lwpr_smooth(signal, h, degree),
            DenoiseMethod::Wavelet { levels } => wavelet_denoise(signal, levels),
            DenoiseMethod::Butterworth { order, cutoff_bins } => {
                let config = ButterworthConfig::new(order, cutoff_bins, signal.values.len())?;
                butterworth_lowpass(signal, &config)
            }
            DenoiseMethod::Tv {
                gamma,
                lambda,
                n_iters,
            } => tv_denoise(
                signal,
                &TvConfig {
                    gamma,
                    lambda,
                    n_iters,
                    unscaled_laplacian: false,
                },
            ),
        }
    }
}

/// Full noisy-estimation pipeline: denoise each coordinate separately (or
/// run the windowed regression detector), detect states, count transitions,
/// and report — with relative errors against `reference` when given.
pub fn denoise_and_estimate(
    observations: &[[f64; 2]],
    targets: &PolygonTargets,
    method: &DenoiseMethod,
    reference: Option<&PairEstimates>,
) -> Result<EstimationReport> {
    let seq = match method {
        DenoiseMethod::Regression { window } => {
            regression_state_detect(observations, targets, *window)?
        }
        _ => {
            let xs: Vec<f64> = observations.iter().map(|p| p[0]).collect();
            let ys: Vec<f64> = observations.iter().map(|p| p[1]).collect();
            let dx = method.apply(&Signal1D::from_values(xs)?)?;
            let dy = method.apply(&Signal1D::from_values(ys)?)?;
            let denoised: Vec<[f64; 2]> = dx
                .values
                .iter()
                .zip(&dy.values)
                .map(|(&x, &y)| [x, y])
                .collect();
            detect_states_polygon(&denoised, targets)?
        }
    };
    let estimates = estimate_taus_from_states(&seq)?;
    let mut report =
        EstimationReport::new(Method::StateDetection, estimates).with_pipeline(method.label());
    if let Some(reference) = reference {
        report = report.with_reference(reference.clone());
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markov::SwitchingProbs;
    use crate::sim::{add_noise, simulate_polygon};
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn triangle_params() -> SwitchingProbs {
        SwitchingProbs::new(
            3,
            [
                ((0, 1), 0.001),
                ((0, 2), 0.006),
                ((1, 0), 0.002),
                ((1, 2), 0.003),
                ((2, 0), 0.004),
                ((2, 1), 0.005),
            ],
        )
        .unwrap()
    }

    #[test]
    fn regression_window_one_equals_plain_detector() {
        let targets = PolygonTargets::triangle();
        let traj = simulate_polygon(
            &triangle_params(),
            &targets,
            0.01,
            [1.0 / 3.0, 1.0 / 3.0],
            3000,
            2,
        )
        .unwrap();
        let ps = traj.positions.as_d2().unwrap();
        let windowed = regression_state_detect(ps, &targets, 1).unwrap();
        let plain = detect_states_polygon(ps, &targets).unwrap();
        assert_eq!(windowed.states(), plain.states());
    }

    #[test]
    fn regression_detects_linear_segment_toward_origin() {
        let targets = PolygonTargets::triangle();
        let ps: Vec<[f64; 2]> = (0..50)
            .map(|k| {
                let s = 1.0 - 0.01 * k as f64;
                [0.3 * s, 0.3 * s]
            })
            .collect();
        for window in [1, 5, 20] {
            let seq = regression_state_detect(&ps, &targets, window).unwrap();
            assert!(seq.states().iter().all(|&s| s == 0), "window {window}");
        }
    }

    #[test]
    fn dft_magnitude_reference_shapes() {
        let n = 64;
        // Constant signal: everything in bin 0.
        let c = 0.7;
        let mags = dft_magnitude(&Signal1D::from_values(vec![c; n]).unwrap());
        assert_relative_eq!(mags[0], n as f64 * c, epsilon = 1e-9);
        for &m in &mags[1..] {
            assert_abs_diff_eq!(m, 0.0, epsilon = 1e-9);
        }
        // Unit impulse: flat magnitude 1.
        let mut impulse = vec![0.0; n];
        impulse[0] = 1.0;
        let mags = dft_magnitude(&Signal1D::from_values(impulse).unwrap());
        for &m in &mags {
            assert_abs_diff_eq!(m, 1.0, epsilon = 1e-12);
        }
        // Pure cosine at bin 5 peaks at bins 5 and n - 5.
        let values: Vec<f64> = (0..n)
            .map(|k| (2.0 * std::f64::consts::PI * 5.0 * k as f64 / n as f64).cos())
            .collect();
        let mags = dft_magnitude(&Signal1D::from_values(values).unwrap());
        for (w, &m) in mags.iter().enumerate() {
            if w == 5 || w == n - 5 {
                assert_relative_eq!(m, n as f64 / 2.0, epsilon = 1e-9);
            } else {
                assert_abs_diff_eq!(m, 0.0, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn pipeline_identity_settings_match_noiseless_estimates() {
        let targets = PolygonTargets::triangle();
        let traj = simulate_polygon(
            &triangle_params(),
            &targets,
            0.01,
            [1.0 / 3.0, 1.0 / 3.0],
            5000,
            3,
        )
        .unwrap();
        let ps = traj.positions.as_d2().unwrap();
        let noiseless = estimate_taus_from_states(
            &detect_states_polygon(ps, &targets).unwrap(),
        )
        .unwrap();

        // Regression with window 1 is exactly the plain detector.
        let report =
            denoise_and_estimate(ps, &targets, &DenoiseMethod::Regression { window: 1 }, None)
                .unwrap();
        assert_eq!(report.estimates, noiseless);

        // A huge data-fit weight makes total variation numerically the
        // identity.
        let report = denoise_and_estimate(
            ps,
            &targets,
            &DenoiseMethod::Tv {
                gamma: 1e12,
                lambda: 20.0,
                n_iters: 10,
            },
            None,
        )
        .unwrap();
        assert_eq!(report.estimates, noiseless);
    }

    #[test]
    fn pipeline_attaches_reference_errors() {
        let targets = PolygonTargets::triangle();
        let traj = simulate_polygon(
            &triangle_params(),
            &targets,
            0.01,
            [1.0 / 3.0, 1.0 / 3.0],
            5000,
            4,
        )
        .unwrap();
        let obs = add_noise(&traj, 0.01, 40).unwrap();
        let ps = obs.positions.as_d2().unwrap();
        let reference = estimate_taus_from_states(
            &detect_states_polygon(traj.positions.as_d2().unwrap(), &targets).unwrap(),
        )
        .unwrap();
        let report = denoise_and_estimate(
            ps,
            &targets,
            &DenoiseMethod::Butterworth {
                order: 5,
                cutoff_bins: 100.0,
            },
            Some(&reference),
        )
        .unwrap();
        assert!(report.relative_errors.is_some());
        assert!(report.mean_relative_error().unwrap() > 0.0);
        assert_eq!(report.method, Method::StateDetection);
        assert!(report.pipeline.as_deref().unwrap().starts_with("butterworth"));
    }

    #[test]
    fn noisy_raw_detection_overcounts_and_denoising_helps() {
        let targets = PolygonTargets::triangle();
        let traj = simulate_polygon(
            &triangle_params(),
            &targets,
            0.01,
            [1.0 / 3.0, 1.0 / 3.0],
            10_000,
            7,
        )
        .unwrap();
        let obs = add_noise(&traj, 0.01, 70).unwrap();
        let ps = obs.positions.as_d2().unwrap();
        let reference = estimate_taus_from_states(
            &detect_states_polygon(traj.positions.as_d2().unwrap(), &targets).unwrap(),
        )
        .unwrap();
        let raw = denoise_and_estimate(
            ps,
            &targets,
            &DenoiseMethod::Regression { window: 1 },
            Some(&reference),
        )
        .unwrap();
        let filtered = denoise_and_estimate(
            ps,
            &targets,
            &DenoiseMethod::Butterworth {
                order: 5,
                cutoff_bins: 100.0,
            },
            Some(&reference),
        )
        .unwrap();
        let raw_err = raw.mean_relative_error().unwrap();
        let filtered_err = filtered.mean_relative_error().unwrap();
        assert!(
            filtered_err < raw_err / 10.0,
            "raw {raw_err} vs filtered {filtered_err}"
        );
    }
}
