//! Parameter estimation from position observations.
//!
//! Three routes to the switching probabilities of the line model: inverting
//! couplets of closed-form statistics (mean paired with frequency, variance,
//! or cumulative-power slope), minimizing the negative log-likelihood of the
//! stationary beta density, and direct state detection. Only state detection
//! generalizes to the polygon models; it infers the state from the motion
//! direction and counts transitions. The continuous-time model has its own
//! estimator built on observed holding times and exit fractions.

mod mle;

pub use mle::{mle_estimate, negative_log_likelihood, GridSpec};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::{PolygonTargets, Trajectory};
use crate::stats;

/// A per-time discrete state sequence, detected or latent.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSequence {
    states: Vec<usize>,
    n_states: usize,
}

impl StateSequence {
    pub fn new(states: Vec<usize>, n_states: usize) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::InsufficientData("empty state sequence".into()));
        }
        if let Some(&bad) = states.iter().find(|&&s| s >= n_states) {
            return Err(Error::InvalidParameters(format!(
                "state {bad} out of range for {n_states} states"
            )));
        }
        Ok(Self { states, n_states })
    }

    pub fn states(&self) -> &[usize] {
        &self.states
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// Per-ordered-pair parameter estimates. Pairs a chain never visited are
/// absent rather than zero.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PairEstimates {
    n_states: usize,
    values: BTreeMap<(usize, usize), f64>,
}

impl PairEstimates {
    pub fn new(n_states: usize) -> Self {
        Self {
            n_states,
            values: BTreeMap::new(),
        }
    }

    pub fn from_pairs(
        n_states: usize,
        pairs: impl IntoIterator<Item = ((usize, usize), f64)>,
    ) -> Self {
        Self {
            n_states,
            values: pairs.into_iter().collect(),
        }
    }

    pub fn insert(&mut self, i: usize, j: usize, value: f64) {
        self.values.insert((i, j), value);
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.values.get(&(i, j)).copied()
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn pairs(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        self.values.iter().map(|(&k, &v)| (k, v))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Which estimation procedure produced a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    MeanFrequency,
    MeanVariance,
    MeanPower,
    Mle,
    StateDetection,
    Poisson,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::MeanFrequency => "mean_frequency",
            Method::MeanVariance => "mean_variance",
            Method::MeanPower => "mean_power",
            Method::Mle => "mle",
            Method::StateDetection => "state_detection",
            Method::Poisson => "poisson",
        }
    }
}

/// Estimates plus optional reference values and relative errors.
///
/// Serialized as JSON with parameter keys as `"ij"` digit strings, e.g.
/// `{"method":"mle","estimates":{"01":0.05,"10":0.08}}`.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimationReport {
    pub method: Method,
    /// Denoiser or detector variant behind a state-detection report.
    pub pipeline: Option<String>,
    pub estimates: PairEstimates,
    pub reference: Option<PairEstimates>,
    pub relative_errors: Option<BTreeMap<(usize, usize), f64>>,
    pub warnings: Vec<String>,
}

impl EstimationReport {
    pub fn new(method: Method, estimates: PairEstimates) -> Self {
        Self {
            method,
            pipeline: None,
            estimates,
            reference: None,
            relative_errors: None,
            warnings: Vec::new(),
        }
    }

    pub fn with_pipeline(mut self, pipeline: impl Into<String>) -> Self {
        self.pipeline = Some(pipeline.into());
        self
    }

    /// Attaches reference values and fills `relative_errors` with
    /// `|est - ref| / ref` for every pair present in both maps.
    pub fn with_reference(mut self, reference: PairEstimates) -> Self {
        let mut errors = BTreeMap::new();
        for ((i, j), est) in self.estimates.pairs() {
            if let Some(r) = reference.get(i, j) {
                if r != 0.0 {
                    errors.insert((i, j), (est - r).abs() / r.abs());
                } else {
                    self.warnings
                        .push(format!("reference for ({i},{j}) is zero; error skipped"));
                }
            }
        }
        self.reference = Some(reference);
        self.relative_errors = Some(errors);
        self
    }

    /// Mean of the relative errors across all compared pairs.
    pub fn mean_relative_error(&self) -> Option<f64> {
        let errs = self.relative_errors.as_ref()?;
        if errs.is_empty() {
            return None;
        }
        Some(errs.values().sum::<f64>() / errs.len() as f64)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ReportDto::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let dto: ReportDto = serde_json::from_str(text)?;
        dto.try_into()
    }
}

fn pair_key((i, j): (usize, usize)) -> String {
    format!("{i}{j}")
}

fn parse_pair_key(key: &str) -> Result<(usize, usize)> {
    let digits: Vec<usize> = key
        .chars()
        .map(|c| c.to_digit(10).map(|d| d as usize))
        .collect::<Option<_>>()
        .ok_or_else(|| Error::InvalidParameters(format!("bad parameter key {key:?}")))?;
    if digits.len() != 2 {
        return Err(Error::InvalidParameters(format!(
            "parameter key {key:?} must be two digits"
        )));
    }
    Ok((digits[0], digits[1]))
}

fn pairs_to_dto(p: &PairEstimates) -> BTreeMap<String, f64> {
    p.pairs().map(|(k, v)| (pair_key(k), v)).collect()
}

fn pairs_from_dto(m: &BTreeMap<String, f64>) -> Result<PairEstimates> {
    let mut out = PairEstimates::new(0);
    let mut max_state = 0;
    for (k, &v) in m {
        let (i, j) = parse_pair_key(k)?;
        max_state = max_state.max(i).max(j);
        out.insert(i, j, v);
    }
    out.n_states = max_state + 1;
    Ok(out)
}

#[derive(Serialize, Deserialize)]
struct ReportDto {
    method: Method,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pipeline: Option<String>,
    estimates: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    reference: Option<BTreeMap<String, f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    relative_errors: Option<BTreeMap<String, f64>>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    warnings: Vec<String>,
}

impl From<&EstimationReport> for ReportDto {
    fn from(r: &EstimationReport) -> Self {
        ReportDto {
            method: r.method,
            pipeline: r.pipeline.clone(),
            estimates: pairs_to_dto(&r.estimates),
            reference: r.reference.as_ref().map(pairs_to_dto),
            relative_errors: r
                .relative_errors
                .as_ref()
                .map(|e| e.iter().map(|(&k, &v)| (pair_key(k), v)).collect()),
            warnings: r.warnings.clone(),
        }
    }
}

impl TryFrom<ReportDto> for EstimationReport {
    type Error = Error;

    fn try_from(dto: ReportDto) -> Result<Self> {
        let relative_errors = match &dto.relative_errors {
            None => None,
            Some(m) => {
                let mut out = BTreeMap::new();
                for (k, &v) in m {
                    out.insert(parse_pair_key(k)?, v);
                }
                Some(out)
            }
        };
        Ok(EstimationReport {
            method: dto.method,
            pipeline: dto.pipeline,
            estimates: pairs_from_dto(&dto.estimates)?,
            reference: dto.reference.as_ref().map(pairs_from_dto).transpose()?,
            relative_errors,
            warnings: dto.warnings,
        })
    }
}

/// Inverts the mean/frequency couplet: `tau01 = omega / (1 - mu)`,
/// `tau10 = omega / mu`.
pub fn invert_mean_frequency(mu: f64, omega: f64) -> Result<(f64, f64)> {
    if !(mu > 0.0 && mu < 1.0) {
        return Err(Error::Domain(format!("mean {mu} outside the open (0,1)")));
    }
    if !(omega > 0.0) {
        return Err(Error::Domain(format!("frequency {omega} must be positive")));
    }
    Ok((omega / (1.0 - mu), omega / mu))
}

/// Inverts the mean/variance couplet:
/// `tau01 = mu^2 v (1-mu) / sigma^2 - mu v` and
/// `tau10 = v (mu-1)(mu^2 - mu + sigma^2) / sigma^2`.
pub fn invert_mean_variance(mu: f64, sigma2: f64, v: f64) -> Result<(f64, f64)> {
    if !(mu > 0.0 && mu < 1.0) {
        return Err(Error::Domain(format!("mean {mu} outside the open (0,1)")));
    }
    if !(v > 0.0) {
        return Err(Error::Domain(format!("speed v = {v} must be positive")));
    }
    if !(sigma2 > 0.0) {
        return Err(Error::Domain(format!("variance {sigma2} must be positive")));
    }
    if sigma2 >= mu * (1.0 - mu) {
        return Err(Error::InfeasibleMoments(format!(
            "variance {sigma2} >= mu(1-mu) = {}",
            mu * (1.0 - mu)
        )));
    }
    let tau01 = mu * mu * v * (1.0 - mu) / sigma2 - mu * v;
    let tau10 = v * (mu - 1.0) * (mu * mu - mu + sigma2) / sigma2;
    Ok((tau01, tau10))
}

/// Inverts the mean/power-slope couplet:
/// `tau01 = mu S v / (v^4 (mu - mu^2) - S)` and
/// `tau10 = S v (mu - 1) / (mu^2 v^4 - mu v^4 + S)`.
pub fn invert_mean_power(mu: f64, slope: f64, v: f64) -> Result<(f64, f64)> {
    if !(mu > 0.0 && mu < 1.0) {
        return Err(Error::Domain(format!("mean {mu} outside the open (0,1)")));
    }
    if !(v > 0.0) {
        return Err(Error::Domain(format!("speed v = {v} must be positive")));
    }
    if !(slope > 0.0) {
        return Err(Error::Domain(format!("slope {slope} must be positive")));
    }
    let v4 = v.powi(4);
    let denom = v4 * (mu - mu * mu) - slope;
    if denom == 0.0 {
        return Err(Error::InfeasibleMoments(
            "power slope equals the v^4 mu (1 - mu) bound".into(),
        ));
    }
    let tau01 = mu * slope * v / denom;
    let tau10 = slope * v * (mu - 1.0) / (mu * mu * v4 - mu * v4 + slope);
    Ok((tau01, tau10))
}

/// Detects the one-dimensional state from the motion direction: increasing
/// position means state 1, decreasing means state 0. Exact ties carry the
/// previous state (state 0 before any motion is seen); the final entry
/// replicates the penultimate so the sequence matches the position count.
pub fn detect_states_line(positions: &[f64]) -> Result<StateSequence> {
    if positions.len() < 2 {
        return Err(Error::InsufficientData(
            "state detection needs at least 2 positions".into(),
        ));
    }
    let mut states = Vec::with_capacity(positions.len());
    let mut prev = 0usize;
    for w in positions.windows(2) {
        let s = if w[1] > w[0] {
            1
        } else if w[1] < w[0] {
            0
        } else {
            prev
        };
        states.push(s);
        prev = s;
    }
    states.push(prev);
    StateSequence::new(states, 2)
}

/// Detects the polygon state: the motion vector between consecutive samples
/// is compared against the directions to every target, and the target with
/// the greatest cosine similarity wins (lowest index on ties). Zero motion
/// carries the previous state, state 0 before any motion is seen; the final
/// entry replicates the penultimate.
pub fn detect_states_polygon(
    positions: &[[f64; 2]],
    targets: &PolygonTargets,
) -> Result<StateSequence> {
    if positions.len() < 2 {
        return Err(Error::InsufficientData(
            "state detection needs at least 2 positions".into(),
        ));
    }
    let mut states = Vec::with_capacity(positions.len());
    let mut prev = 0usize;
    for w in positions.windows(2) {
        let a = [w[1][0] - w[0][0], w[1][1] - w[0][1]];
        states.push(best_aligned_target(a, w[0], targets).unwrap_or(prev));
        prev = *states.last().unwrap();
    }
    states.push(prev);
    StateSequence::new(states, targets.len())
}

/// Index of the target whose direction from `origin` best aligns with `a`,
/// or `None` when `a` has zero length.
pub(crate) fn best_aligned_target(
    a: [f64; 2],
    origin: [f64; 2],
    targets: &PolygonTargets,
) -> Option<usize> {
    let na = (a[0] * a[0] + a[1] * a[1]).sqrt();
    if na == 0.0 {
        return None;
    }
    let mut best: Option<(usize, f64)> = None;
    for (i, g) in targets.vertices().iter().enumerate() {
        let b = [g[0] - origin[0], g[1] - origin[1]];
        let nb = (b[0] * b[0] + b[1] * b[1]).sqrt();
        if nb == 0.0 {
            continue;
        }
        let cos = (a[0] * b[0] + a[1] * b[1]) / (na * nb);
        if best.map_or(true, |(_, c)| cos > c) {
            best = Some((i, cos));
        }
    }
    best.map(|(i, _)| i)
}

/// Empirical switching probabilities from a state sequence:
/// `tau_ij = #(i -> j transitions) / #(steps spent in i)`, occupancy counted
/// over the steps that have a successor. States never visited are absent
/// from the result rather than zero.
pub fn estimate_taus_from_states(seq: &StateSequence) -> Result<PairEstimates> {
    let states = seq.states();
    if states.len() < 2 {
        return Err(Error::InsufficientData(
            "need at least 2 states to estimate switching probabilities".into(),
        ));
    }
    let n = seq.n_states();
    let mut occupancy = vec![0usize; n];
    let mut counts = BTreeMap::new();
    for w in states.windows(2) {
        occupancy[w[0]] += 1;
        if w[0] != w[1] {
            *counts.entry((w[0], w[1])).or_insert(0usize) += 1;
        }
    }
    let mut out = PairEstimates::new(n);
    for i in 0..n {
        if occupancy[i] == 0 {
            continue;
        }
        for j in 0..n {
            if j == i {
                continue;
            }
            let c = counts.get(&(i, j)).copied().unwrap_or(0);
            out.insert(i, j, c as f64 / occupancy[i] as f64);
        }
    }
    Ok(out)
}

/// Estimates the mean waiting times of the continuous-time model:
/// `mu_i` is the average observed holding time in state `i`, `p_ij` the
/// fraction of exits from `i` that go to `j`, and `mu_ij = mu_i / p_ij`.
/// Consecutive equal states are merged into one holding interval; the final
/// interval has no observed exit and is dropped. Pairs never exited to are
/// absent from the result.
pub fn estimate_poisson_params(seq: &StateSequence, times: &[f64]) -> Result<PairEstimates> {
    let states = seq.states();
    if states.len() != times.len() {
        return Err(Error::InvalidParameters(format!(
            "{} states vs {} times",
            states.len(),
            times.len()
        )));
    }
    if states.len() < 2 {
        return Err(Error::InsufficientData(
            "need at least 2 samples to observe an exit".into(),
        ));
    }
    let n = seq.n_states();
    // Runs of constant state: (state, entry time).
    let mut runs = vec![(states[0], times[0])];
    for k in 1..states.len() {
        if states[k] != runs.last().unwrap().0 {
            runs.push((states[k], times[k]));
        }
    }
    let mut hold_sum = vec![0.0f64; n];
    let mut exits = vec![0usize; n];
    let mut exit_counts = BTreeMap::new();
    for w in runs.windows(2) {
        let (state, entered) = w[0];
        let (next_state, exited) = w[1];
        hold_sum[state] += exited - entered;
        exits[state] += 1;
        *exit_counts.entry((state, next_state)).or_insert(0usize) += 1;
    }
    let mut out = PairEstimates::new(n);
    for i in 0..n {
        if exits[i] == 0 {
            continue;
        }
        let mean_hold = hold_sum[i] / exits[i] as f64;
        for j in 0..n {
            if j == i {
                continue;
            }
            let c = exit_counts.get(&(i, j)).copied().unwrap_or(0);
            if c > 0 {
                let p_ij = c as f64 / exits[i] as f64;
                out.insert(i, j, mean_hold / p_ij);
            }
        }
    }
    Ok(out)
}

/// Warnings for estimates that left the (0, 1] probability range.
fn range_warnings(tau01: f64, tau10: f64) -> Vec<String> {
    let mut out = Vec::new();
    for (name, val) in [("tau01", tau01), ("tau10", tau10)] {
        if !(val > 0.0 && val <= 1.0) {
            out.push(format!("{name} = {val} outside (0,1]"));
        }
    }
    out
}

fn couplet_report(method: Method, tau01: f64, tau10: f64) -> EstimationReport {
    let mut report = EstimationReport::new(
        method,
        PairEstimates::from_pairs(2, [((0, 1), tau01), ((1, 0), tau10)]),
    );
    report.warnings.extend(range_warnings(tau01, tau10));
    report
}

/// Mean/frequency estimate from noiseless line positions. The frequency is
/// the directed 0 -> 1 transition count per step of the detected states.
pub fn couplet_mean_frequency(positions: &[f64]) -> Result<EstimationReport> {
    let m = stats::empirical_moments(positions)?;
    let seq = detect_states_line(positions)?;
    let omega = stats::directed_transition_frequency(seq.states(), 0, 1)?;
    if omega == 0.0 {
        return Err(Error::InsufficientData(
            "no 0 -> 1 transitions observed".into(),
        ));
    }
    let (tau01, tau10) = invert_mean_frequency(m.mean, omega)?;
    Ok(couplet_report(Method::MeanFrequency, tau01, tau10))
}

/// Mean/variance estimate from noiseless line positions.
pub fn couplet_mean_variance(positions: &[f64], v: f64) -> Result<EstimationReport> {
    let m = stats::empirical_moments(positions)?;
    let (tau01, tau10) = invert_mean_variance(m.mean, m.variance, v)?;
    Ok(couplet_report(Method::MeanVariance, tau01, tau10))
}

/// Mean/power-slope estimate from noiseless line positions. The cumulative
/// power is rebuilt from the detected states, and its least-squares slope
/// feeds the inversion.
pub fn couplet_mean_power(positions: &[f64], v: f64) -> Result<EstimationReport> {
    let m = stats::empirical_moments(positions)?;
    let seq = detect_states_line(positions)?;
    let traj = Trajectory {
        times: (0..positions.len()).map(|t| t as f64).collect(),
        positions: crate::sim::Positions::D1(positions.to_vec()),
        states: seq.states().to_vec(),
        speed: v,
        model: crate::sim::ModelKind::DiscreteMarkov,
    };
    let power = stats::cumulative_power(&traj)?;
    let slope = stats::fit_slope(&power.times, &power.values)?;
    let (tau01, tau10) = invert_mean_power(m.mean, slope, v)?;
    Ok(couplet_report(Method::MeanPower, tau01, tau10))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markov::SwitchingProbs;
    use crate::sim::{simulate_line, simulate_poisson_events, simulate_polygon, MeanWaitTimes};
    use crate::stats::{predicted_frequency, predicted_moments, predicted_power_slope};
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn invert_mean_frequency_examples() {
        let (t01, t10) = invert_mean_frequency(0.5, 0.1).unwrap();
        assert_relative_eq!(t01, 0.2, epsilon = 1e-15);
        assert_relative_eq!(t10, 0.2, epsilon = 1e-15);

        let (t01, t10) = invert_mean_frequency(5.0 / 13.0, 0.004 / 0.13).unwrap();
        assert_relative_eq!(t01, 0.05, epsilon = 1e-12);
        assert_relative_eq!(t10, 0.08, epsilon = 1e-12);

        assert!(invert_mean_frequency(1.0, 0.1).is_err());
        assert!(invert_mean_frequency(0.0, 0.1).is_err());
    }

    #[test]
    fn invert_mean_variance_round_trip_and_bound() {
        let m = predicted_moments(0.05, 0.08, 0.1).unwrap();
        let (t01, t10) = invert_mean_variance(m.mean, m.variance, 0.1).unwrap();
        assert_relative_eq!(t01, 0.05, epsilon = 1e-12);
        assert_relative_eq!(t10, 0.08, epsilon = 1e-12);

        // Rounded inputs from the same example still land close.
        let (t01, t10) = invert_mean_variance(0.384615, 0.102907, 0.1).unwrap();
        assert_abs_diff_eq!(t01, 0.05, epsilon = 1e-5);
        assert_abs_diff_eq!(t10, 0.08, epsilon = 1e-5);

        assert!(matches!(
            invert_mean_variance(0.5, 0.25, 0.1),
            Err(Error::InfeasibleMoments(_))
        ));
    }

    #[test]
    fn invert_mean_power_round_trip() {
        let s = predicted_power_slope(0.05, 0.08, 0.1).unwrap();
        let (t01, t10) = invert_mean_power(5.0 / 13.0, s, 0.1).unwrap();
        assert_relative_eq!(t01, 0.05, epsilon = 1e-10);
        assert_relative_eq!(t10, 0.08, epsilon = 1e-10);

        // Symmetric parameters come back equal.
        let s = predicted_power_slope(0.03, 0.03, 0.2).unwrap();
        let (t01, t10) = invert_mean_power(0.5, s, 0.2).unwrap();
        assert_relative_eq!(t01, t10, epsilon = 1e-12);

        let (t01, t10) = invert_mean_power(0.384615, 1.33779e-5, 0.1).unwrap();
        assert_abs_diff_eq!(t01, 0.05, epsilon = 1e-3);
        assert_abs_diff_eq!(t10, 0.08, epsilon = 1e-3);
    }

    #[test]
    fn couplet_round_trips_randomized() {
        let mut rng = ChaCha8Rng::seed_from_u64(100);
        for _ in 0..200 {
            let t01 = rng.random_range(1e-3..0.9);
            let t10 = rng.random_range(1e-3..0.9);
            let v = rng.random_range(0.01..5.0);
            let m = predicted_moments(t01, t10, v).unwrap();
            let omega = predicted_frequency(t01, t10).unwrap();
            let s = predicted_power_slope(t01, t10, v).unwrap();

            let (a, b) = invert_mean_frequency(m.mean, omega).unwrap();
            assert_relative_eq!(a, t01, max_relative = 1e-10);
            assert_relative_eq!(b, t10, max_relative = 1e-10);
            let (a, b) = invert_mean_variance(m.mean, m.variance, v).unwrap();
            assert_relative_eq!(a, t01, max_relative = 1e-10);
            assert_relative_eq!(b, t10, max_relative = 1e-10);
            let (a, b) = invert_mean_power(m.mean, s, v).unwrap();
            assert_relative_eq!(a, t01, max_relative = 1e-10);
            assert_relative_eq!(b, t10, max_relative = 1e-10);
        }
    }

    #[test]
    fn detect_line_examples() {
        let seq = detect_states_line(&[0.5, 0.45, 0.41]).unwrap();
        assert_eq!(seq.states(), &[0, 0, 0]);
        let seq = detect_states_line(&[0.5, 0.55, 0.52]).unwrap();
        assert_eq!(seq.states(), &[1, 0, 0]);
        // Exact tie carries the previous state.
        let seq = detect_states_line(&[0.5, 0.6, 0.6, 0.55]).unwrap();
        assert_eq!(seq.states(), &[1, 1, 0, 0]);
        assert!(detect_states_line(&[0.5]).is_err());
    }

    #[test]
    fn detect_line_matches_latent_states() {
        for seed in 0..20u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t01 = rng.random_range(0.005..0.3);
            let t10 = rng.random_range(0.005..0.3);
            let params = SwitchingProbs::two_state(t01, t10).unwrap();
            let traj = simulate_line(&params, 0.1, 0.5, 2000, seed).unwrap();
            let seq = detect_states_line(traj.positions.as_d1().unwrap()).unwrap();
            assert_eq!(seq.states(), &traj.states[..]);
        }
    }

    #[test]
    fn detect_polygon_examples() {
        let targets = PolygonTargets::triangle();
        // Motion straight toward the origin.
        let seq = detect_states_polygon(&[[1.0 / 3.0, 1.0 / 3.0], [0.33, 0.33]], &targets)
            .unwrap();
        assert_eq!(seq.states(), &[0, 0]);
        // Motion exactly toward (1, 0).
        let p = [0.2, 0.3];
        let dir = [1.0 - p[0], -p[1]];
        let q = [p[0] + 1e-3 * dir[0], p[1] + 1e-3 * dir[1]];
        let seq = detect_states_polygon(&[p, q], &targets).unwrap();
        assert_eq!(seq.states(), &[1, 1]);
        // Zero motion at the start defaults to state 0.
        let seq = detect_states_polygon(&[[0.2, 0.2], [0.2, 0.2], [0.1, 0.1]], &targets).unwrap();
        assert_eq!(seq.states(), &[0, 0, 0]);
    }

    #[test]
    fn detect_polygon_matches_latent_states() {
        let targets = PolygonTargets::triangle();
        for seed in 0..20u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
            let pairs: Vec<((usize, usize), f64)> = (0..3)
                .flat_map(|i| (0..3).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| ((i, j), rng.random_range(0.001..0.2)))
                .collect();
            let params = SwitchingProbs::new(3, pairs).unwrap();
            let traj =
                simulate_polygon(&params, &targets, 0.01, [1.0 / 3.0, 1.0 / 3.0], 2000, seed)
                    .unwrap();
            let seq =
                detect_states_polygon(traj.positions.as_d2().unwrap(), &targets).unwrap();
            assert_eq!(seq.states(), &traj.states[..]);
        }
    }

    #[test]
    fn estimate_taus_hand_counts() {
        let seq = StateSequence::new(vec![0, 0, 1, 1, 1, 0], 2).unwrap();
        let est = estimate_taus_from_states(&seq).unwrap();
        assert_relative_eq!(est.get(0, 1).unwrap(), 0.5, epsilon = 1e-15);
        assert_relative_eq!(est.get(1, 0).unwrap(), 1.0 / 3.0, epsilon = 1e-15);

        let seq = StateSequence::new(vec![0, 0, 0, 0], 2).unwrap();
        let est = estimate_taus_from_states(&seq).unwrap();
        assert_eq!(est.get(0, 1).unwrap(), 0.0);
        assert_eq!(est.get(1, 0), None);
    }

    #[test]
    fn estimate_taus_converges_on_line_simulation() {
        let params = SwitchingProbs::two_state(0.005, 0.008).unwrap();
        let mut errs01 = Vec::new();
        let mut errs10 = Vec::new();
        for seed in 0..5 {
            let traj = simulate_line(&params, 0.1, 0.5, 100_000, seed).unwrap();
            let seq = detect_states_line(traj.positions.as_d1().unwrap()).unwrap();
            let est = estimate_taus_from_states(&seq).unwrap();
            errs01.push((est.get(0, 1).unwrap() - 0.005).abs() / 0.005);
            errs10.push((est.get(1, 0).unwrap() - 0.008).abs() / 0.008);
        }
        errs01.sort_by(|a, b| a.partial_cmp(b).unwrap());
        errs10.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!(errs01[2] < 0.10, "median tau01 error {}", errs01[2]);
        assert!(errs10[2] < 0.10, "median tau10 error {}", errs10[2]);
    }

    #[test]
    fn poisson_estimates_from_event_log() {
        let params = MeanWaitTimes::new(
            3,
            [
                ((0, 1), 12.0),
                ((0, 2), 18.0),
                ((1, 0), 10.0),
                ((1, 2), 30.0),
                ((2, 0), 8.0),
                ((2, 1), 22.0),
            ],
        )
        .unwrap();
        let log = simulate_poisson_events(&params, 40_000, 9).unwrap();
        let seq = StateSequence::new(log.states.clone(), 3).unwrap();
        let est = estimate_poisson_params(&seq, &log.times).unwrap();
        for ((i, j), truth) in params.pairs() {
            let got = est.get(i, j).unwrap();
            assert!(
                (got - truth).abs() / truth < 0.1,
                "mu_{i}{j}: {got} vs {truth}"
            );
        }
    }

    #[test]
    fn poisson_memorylessness_of_holding_times() {
        let params = MeanWaitTimes::two_state(5.0, 3.0).unwrap();
        let log = simulate_poisson_events(&params, 60_000, 33).unwrap();
        let mut holds = Vec::new();
        for k in 0..log.states.len() - 1 {
            if log.states[k] == 0 {
                holds.push(log.times[k + 1] - log.times[k]);
            }
        }
        let t = 2.5;
        let s = 2.5;
        let beyond_t = holds.iter().filter(|&&h| h > t).count();
        let beyond_ts = holds.iter().filter(|&&h| h > t + s).count();
        let beyond_s = holds.iter().filter(|&&h| h > s).count();
        let p_cond = beyond_ts as f64 / beyond_t as f64;
        let p_s = beyond_s as f64 / holds.len() as f64;
        let se = (p_s * (1.0 - p_s) / beyond_t as f64).sqrt();
        assert!(
            (p_cond - p_s).abs() < 3.0 * se,
            "conditional {p_cond} vs unconditional {p_s}"
        );
    }

    #[test]
    fn couplet_drivers_recover_parameters() {
        let params = SwitchingProbs::two_state(0.05, 0.08).unwrap();
        let traj = simulate_line(&params, 0.1, 0.5, 100_000, 8).unwrap();
        let xs = traj.positions.as_d1().unwrap();
        for (report, tol) in [
            (couplet_mean_frequency(xs).unwrap(), 0.15),
            (couplet_mean_variance(xs, 0.1).unwrap(), 0.25),
            (couplet_mean_power(xs, 0.1).unwrap(), 0.25),
        ] {
            let t01 = report.estimates.get(0, 1).unwrap();
            let t10 = report.estimates.get(1, 0).unwrap();
            assert!(
                (t01 - 0.05).abs() / 0.05 < tol,
                "{:?}: tau01 = {t01}",
                report.method
            );
            assert!(
                (t10 - 0.08).abs() / 0.08 < tol,
                "{:?}: tau10 = {t10}",
                report.method
            );
        }
    }

    #[test]
    fn report_json_round_trip() {
        let est = PairEstimates::from_pairs(2, [((0, 1), 0.05), ((1, 0), 0.08)]);
        let reference = PairEstimates::from_pairs(2, [((0, 1), 0.04), ((1, 0), 0.08)]);
        let report = EstimationReport::new(Method::Mle, est).with_reference(reference);
        let json = report.to_json().unwrap();
        assert!(json.contains("\"01\""));
        assert!(json.contains("\"mle\""));
        let back = EstimationReport::from_json(&json).unwrap();
        assert_eq!(back.method, Method::Mle);
        assert_relative_eq!(back.estimates.get(0, 1).unwrap(), 0.05);
        let err01 = back.relative_errors.as_ref().unwrap()[&(0, 1)];
        assert_relative_eq!(err01, 0.25, epsilon = 1e-12);
    }

    #[test]
    fn report_flags_out_of_range_estimates() {
        // A frequency higher than the mean allows pushes tau10 past 1.
        let report = couplet_report(Method::MeanFrequency, 0.5, 1.7);
        assert_eq!(report.warnings.len(), 1);
        assert!(report.warnings[0].contains("tau10"));
    }
}
