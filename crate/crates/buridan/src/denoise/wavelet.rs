//! Periodized discrete wavelet transform with sym8 filters and multi-level
//! soft thresholding.
//!
//! The transform is orthonormal for even lengths, so analysis followed by
//! synthesis is the identity up to rounding. Signals whose length is not a
//! multiple of `2^levels` are edge-padded (last sample repeated) before the
//! periodized transform and truncated after reconstruction, which preserves
//! perfect reconstruction for every length.
//!
//! Denoising soft-thresholds every detail level at the universal threshold
//! `sigma * sqrt(2 ln N)`, with `sigma` the median absolute deviation of the
//! finest detail coefficients divided by 0.6745.

use super::Signal1D;
use crate::error::{Error, Result};

/// Decomposition low-pass filter of the sym8 wavelet (16 taps).
pub const SYM8_LO: [f64; 16] = [
    -0.003_382_415_951_006_125_6,
    -0.000_542_132_331_791_148_1,
    0.031_695_087_811_492_98,
    0.007_607_487_324_917_605,
    -0.143_294_238_350_809_7,
    -0.061_273_359_067_658_524,
    0.481_359_651_258_372_2,
    0.777_185_751_700_523_5,
    0.364_441_894_835_331_4,
    -0.051_945_838_107_709_04,
    -0.027_219_029_917_056_003,
    0.049_137_179_673_607_506,
    0.003_808_752_013_890_615,
    -0.014_952_258_337_048_23,
    -0.000_302_920_514_721_366_8,
    0.001_889_950_332_759_460_9,
];

/// Quadrature-mirror high-pass companion of [`SYM8_LO`].
fn sym8_hi() -> [f64; 16] {
    let mut g = [0.0; 16];
    for (m, out) in g.iter_mut().enumerate() {
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        *out = sign * SYM8_LO[15 - m];
    }
    g
}

/// Multi-level decomposition: detail bands finest first, then the coarsest
/// approximation.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletPyramid {
    pub details: Vec<Vec<f64>>,
    pub approx: Vec<f64>,
    original_len: usize,
}

/// One analysis level of the periodized transform.
fn analyze(c: &[f64], lo: &[f64; 16], hi: &[f64; 16]) -> (Vec<f64>, Vec<f64>) {
    let len = c.len();
    let half = len / 2;
    let mut approx = vec![0.0; half];
    let mut detail = vec![0.0; half];
    for k in 0..half {
        let mut a = 0.0;
        let mut d = 0.0;
        for m in 0..16 {
            let x = c[(2 * k + m) % len];
            a += lo[m] * x;
            d += hi[m] * x;
        }
        approx[k] = a;
        detail[k] = d;
    }
    (approx, detail)
}

/// One synthesis level, the adjoint of [`analyze`].
fn synthesize(approx: &[f64], detail: &[f64], lo: &[f64; 16], hi: &[f64; 16]) -> Vec<f64> {
    let half = approx.len();
    let len = 2 * half;
    let mut out = vec![0.0; len];
    for k in 0..half {
        for m in 0..16 {
            out[(2 * k + m) % len] += lo[m] * approx[k] + hi[m] * detail[k];
        }
    }
    out
}

fn check_depth(padded: usize, levels: usize) -> Result<()> {
    let mut len = padded;
    for _ in 0..levels {
        if len < 16 {
            return Err(Error::InsufficientData(format!(
                "length {len} shorter than the 16-tap filter support after decimation"
            )));
        }
        len /= 2;
    }
    Ok(())
}

/// Forward periodized transform over `levels` levels. The signal must be at
/// least `2^levels` long; lengths that are not a multiple of `2^levels` are
/// edge-padded internally.
pub fn dwt_forward(values: &[f64], levels: usize) -> Result<WaveletPyramid> {
    if levels == 0 {
        return Err(Error::InvalidParameters("levels must be positive".into()));
    }
    let chunk = 1usize << levels;
    if values.len() < chunk {
        return Err(Error::InsufficientData(format!(
            "signal of length {} shorter than 2^{levels}",
            values.len()
        )));
    }
    let padded_len = values.len().div_ceil(chunk) * chunk;
    check_depth(padded_len, levels)?;
    let mut current = values.to_vec();
    current.resize(padded_len, *values.last().expect("nonempty"));

    let lo = SYM8_LO;
    let hi = sym8_hi();
    let mut details = Vec::with_capacity(levels);
    for _ in 0..levels {
        let (approx, detail) = analyze(&current, &lo, &hi);
        details.push(detail);
        current = approx;
    }
    Ok(WaveletPyramid {
        details,
        approx: current,
        original_len: values.len(),
    })
}

/// Inverse of [`dwt_forward`], truncated back to the original length.
pub fn dwt_inverse(pyramid: &WaveletPyramid) -> Vec<f64> {
    let lo = SYM8_LO;
    let hi = sym8_hi();
    let mut current = pyramid.approx.clone();
    for detail in pyramid.details.iter().rev() {
        current = synthesize(&current, detail, &lo, &hi);
    }
    current.truncate(pyramid.original_len);
    current
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Universal threshold from the finest detail band:
/// `median(|d1|) / 0.6745 * sqrt(2 ln N)`.
fn universal_threshold(finest_detail: &[f64], n: usize) -> f64 {
    let mut abs: Vec<f64> = finest_detail.iter().map(|d| d.abs()).collect();
    let sigma = median(&mut abs) / 0.6745;
    sigma * (2.0 * (n as f64).ln()).sqrt()
}

/// Wavelet denoising: sym8 decomposition over `levels` levels, soft
/// thresholding of every detail band at the universal threshold, inverse
/// transform.
pub fn wavelet_denoise(signal: &Signal1D, levels: usize) -> Result<Signal1D> {
    let mut pyramid = dwt_forward(&signal.values, levels)?;
    let threshold = universal_threshold(&pyramid.details[0], signal.values.len());
    for band in &mut pyramid.details {
        for d in band.iter_mut() {
            *d = super::tv::shrink(*d, threshold);
        }
    }
    Ok(Signal1D {
        values: dwt_inverse(&pyramid),
        dt: signal.dt,
    })
}
