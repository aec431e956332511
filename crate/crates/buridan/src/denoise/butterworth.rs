//! Lowpass Butterworth filtering as a cascade of second-order sections.
//!
//! The analog prototype is discretized by the bilinear transform with the
//! cutoff pre-warped, so the digital response is exactly -3 dB at the
//! requested cutoff. Each section's numerator is scaled for unit DC gain,
//! and the filter state starts step-matched to the first sample to suppress
//! the startup transient. Filtering is causal single-pass, which is why
//! detected transitions lag slightly on filtered data.

use num_complex::Complex64;

use super::Signal1D;
use crate::error::{Error, Result};

/// Cutoff specification: `cutoff_bins` is a DFT bin index out of
/// `n_samples` samples, so the normalized cutoff is
/// `cutoff_bins / (n_samples / 2)` of Nyquist.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ButterworthConfig {
    pub order: usize,
    pub cutoff_bins: f64,
    pub n_samples: usize,
}

impl ButterworthConfig {
    pub fn new(order: usize, cutoff_bins: f64, n_samples: usize) -> Result<Self> {
        let config = Self {
            order,
            cutoff_bins,
            n_samples,
        };
        config.validate()?;
        Ok(config)
    }

    /// Fifth-order filter with the cutoff at bin 100.
    pub fn standard(n_samples: usize) -> Result<Self> {
        Self::new(5, 100.0, n_samples)
    }

    fn validate(&self) -> Result<()> {
        if self.order == 0 {
            return Err(Error::InvalidParameters("order must be positive".into()));
        }
        if !(self.cutoff_bins > 0.0) {
            return Err(Error::InvalidParameters(format!(
                "cutoff {} must be positive",
                self.cutoff_bins
            )));
        }
        if self.cutoff_bins >= self.n_samples as f64 / 2.0 {
            return Err(Error::InvalidParameters(format!(
                "cutoff bin {} at or above Nyquist ({} samples)",
                self.cutoff_bins, self.n_samples
            )));
        }
        Ok(())
    }

    /// Fraction of Nyquist.
    pub fn normalized_cutoff(&self) -> f64 {
        self.cutoff_bins / (self.n_samples as f64 / 2.0)
    }
}

/// One second-order section `(b0 + b1 z^-1 + b2 z^-2) / (1 + a1 z^-1 + a2 z^-2)`.
/// First-order sections have `b2 = a2 = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
}

impl Biquad {
    /// Poles in the z-plane.
    pub fn poles(&self) -> Vec<Complex64> {
        if self.a2 == 0.0 {
            return vec![Complex64::new(-self.a1, 0.0)];
        }
        let disc = Complex64::new(self.a1 * self.a1 - 4.0 * self.a2, 0.0).sqrt();
        let neg_a1 = Complex64::new(-self.a1, 0.0);
        vec![(neg_a1 + disc) / 2.0, (neg_a1 - disc) / 2.0]
    }
}

/// Designs the cascade for a lowpass Butterworth of the given order and
/// normalized cutoff (fraction of Nyquist, in (0, 1)).
pub fn design_lowpass(order: usize, normalized_cutoff: f64) -> Result<Vec<Biquad>> {
    if order == 0 {
        return Err(Error::InvalidParameters("order must be positive".into()));
    }
    if !(normalized_cutoff > 0.0 && normalized_cutoff < 1.0) {
        return Err(Error::InvalidParameters(format!(
            "normalized cutoff {normalized_cutoff} outside (0,1)"
        )));
    }
    // Pre-warp so the bilinear transform lands the analog cutoff exactly on
    // the digital one.
    let warped = (std::f64::consts::PI * normalized_cutoff / 2.0).tan();
    let n = order;
    let analog_pole = |k: usize| -> Complex64 {
        let theta = std::f64::consts::PI * (2.0 * k as f64 + 1.0) / (2.0 * n as f64)
            + std::f64::consts::FRAC_PI_2;
        warped * Complex64::new(theta.cos(), theta.sin())
    };
    let bilinear = |p: Complex64| (1.0 + p) / (1.0 - p);

    let mut sections = Vec::with_capacity(n.div_ceil(2));
    for k in 0..n / 2 {
        let z = bilinear(analog_pole(k));
        let a1 = -2.0 * z.re;
        let a2 = z.norm_sqr();
        // Two zeros at z = -1; scale for unit DC gain.
        let scale = (1.0 + a1 + a2) / 4.0;
        sections.push(Biquad {
            b0: scale,
            b1: 2.0 * scale,
            b2: scale,
            a1,
            a2,
        });
    }
    if n % 2 == 1 {
        let z = bilinear(analog_pole(n / 2));
        debug_assert!(z.im.abs() < 1e-12);
        let a1 = -z.re;
        let scale = (1.0 + a1) / 2.0;
        sections.push(Biquad {
            b0: scale,
            b1: scale,
            b2: 0.0,
            a1,
            a2: 0.0,
        });
    }
    Ok(sections)
}

/// Causal single-pass filtering through the cascade, transposed direct
/// form II, with states initialized to the constant-input fixed point at
/// the signal's first value.
pub fn butterworth_lowpass(signal: &Signal1D, config: &ButterworthConfig) -> Result<Signal1D> {
    config.validate()?;
    if config.n_samples != signal.values.len() {
        return Err(Error::InvalidParameters(format!(
            "config sized for {} samples, signal has {}",
            config.n_samples,
            signal.values.len()
        )));
    }
    let sections = design_lowpass(config.order, config.normalized_cutoff())?;
    let first = signal.values[0];
    // Per-section steady state for constant input equal to `first`; with
    // unit DC gain each section's steady output is `first` as well.
    let mut s1: Vec<f64> = sections
        .iter()
        .map(|s| first * (s.b1 - s.a1 + s.b2 - s.a2))
        .collect();
    let mut s2: Vec<f64> = sections.iter().map(|s| first * (s.b2 - s.a2)).collect();

    let mut out = Vec::with_capacity(signal.values.len());
    for &sample in &signal.values {
        let mut x = sample;
        for (k, sec) in sections.iter().enumerate() {
            let y = sec.b0 * x + s1[k];
            s1[k] = sec.b1 * x - sec.a1 * y + s2[k];
            s2[k] = sec.b2 * x - sec.a2 * y;
            x = y;
        }
        out.push(x);
    }
    Ok(Signal1D {
        values: out,
        dt: signal.dt,
    })
}
