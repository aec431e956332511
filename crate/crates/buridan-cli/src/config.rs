//! Experiment configuration: JSON schema, validation, and conversion into
//! library types.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use buridan::denoise::DenoiseMethod;
use buridan::estimators::{GridSpec, PairEstimates};
use buridan::markov::SwitchingProbs;
use buridan::sim::{MeanWaitTimes, PolygonTargets};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    Line,
    Triangle,
    Polygon,
    Poisson,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorMethod {
    MeanFrequency,
    MeanVariance,
    MeanPower,
    Mle,
    StateDetection,
    Poisson,
    Regression,
    Denoise,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MleSearch {
    #[serde(default = "MleSearch::default_tau_min")]
    pub tau_min: f64,
    #[serde(default = "MleSearch::default_tau_max")]
    pub tau_max: f64,
    #[serde(default = "MleSearch::default_grid_points")]
    pub grid_points: usize,
    #[serde(default = "MleSearch::default_refine_tol")]
    pub refine_tol: f64,
}

impl MleSearch {
    fn default_tau_min() -> f64 {
        GridSpec::default().tau_min
    }
    fn default_tau_max() -> f64 {
        GridSpec::default().tau_max
    }
    fn default_grid_points() -> usize {
        GridSpec::default().grid_points
    }
    fn default_refine_tol() -> f64 {
        GridSpec::default().refine_tol
    }

    pub fn to_grid_spec(&self) -> GridSpec {
        GridSpec {
            tau_min: self.tau_min,
            tau_max: self.tau_max,
            grid_points: self.grid_points,
            refine_tol: self.refine_tol,
        }
    }
}

impl Default for MleSearch {
    fn default() -> Self {
        Self {
            tau_min: Self::default_tau_min(),
            tau_max: Self::default_tau_max(),
            grid_points: Self::default_grid_points(),
            refine_tol: Self::default_refine_tol(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorConfig {
    pub method: EstimatorMethod,
    /// Per-coordinate denoiser for `method = "denoise"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub denoiser: Option<DenoiseMethod>,
    /// Viewing window for `method = "regression"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<usize>,
    /// Search grid for `method = "mle"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mle: Option<MleSearch>,
    /// Reference parameter values (keys as "ij" digit strings) for
    /// relative-error reporting.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<BTreeMap<String, f64>>,
}

/// One experiment: model, parameters, run lengths, noise, seeds, and the
/// estimator to apply. All optional fields have the documented defaults.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: Model,
    /// Switching probabilities for the discrete models, keys "ij".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<BTreeMap<String, f64>>,
    /// Mean waiting times for the Poisson model, keys "ij".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<BTreeMap<String, f64>>,
    /// Target vertices for polygon and poisson models; the triangle model
    /// fixes them at (0,0), (1,0), (0,1).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub targets: Option<Vec<[f64; 2]>>,
    pub v: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_steps: Option<usize>,
    /// Poisson model: total simulated time.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    /// Poisson model: sampling grid spacing (default 1, the discrete
    /// model's cadence).
    #[serde(default = "default_sample_dt")]
    pub sample_dt: f64,
    /// Line model start (default 0.5).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<f64>,
    /// Planar start (default (1/3, 1/3) for the triangle, the vertex
    /// centroid otherwise).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p0: Option<[f64; 2]>,
    #[serde(default)]
    pub noise_sigma: f64,
    pub seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimator: Option<EstimatorConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

fn default_sample_dt() -> f64 {
    1.0
}

pub fn parse_pair_key(key: &str) -> Result<(usize, usize), CliError> {
    let digits: Vec<usize> = key
        .chars()
        .map(|c| c.to_digit(10).map(|d| d as usize))
        .collect::<Option<_>>()
        .ok_or_else(|| CliError::Config(format!("bad parameter key {key:?}")))?;
    if digits.len() != 2 {
        return Err(CliError::Config(format!(
            "parameter key {key:?} must be two digits \"ij\""
        )));
    }
    Ok((digits[0], digits[1]))
}

fn pairs_from_keys(
    map: &BTreeMap<String, f64>,
) -> Result<Vec<((usize, usize), f64)>, CliError> {
    map.iter()
        .map(|(k, &v)| Ok((parse_pair_key(k)?, v)))
        .collect()
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let config: Self =
            serde_json::from_str(text).map_err(|e| CliError::Config(format!("bad config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.seeds.is_empty() {
            return Err(CliError::Config("seeds must be nonempty".into()));
        }
        if !(self.v > 0.0) {
            return Err(CliError::Config(format!("v = {} must be positive", self.v)));
        }
        if self.noise_sigma < 0.0 {
            return Err(CliError::Config("noise_sigma must be nonnegative".into()));
        }
        match self.model {
            Model::Poisson => {
                if self.mu.is_none() {
                    return Err(CliError::Config("poisson model requires \"mu\"".into()));
                }
                if self.horizon.is_none() {
                    return Err(CliError::Config("poisson model requires \"horizon\"".into()));
                }
            }
            _ => {
                if self.tau.is_none() {
                    return Err(CliError::Config(format!(
                        "{:?} model requires \"tau\"",
                        self.model
                    )));
                }
                let n_steps = self
                    .n_steps
                    .ok_or_else(|| CliError::Config("discrete models require n_steps".into()))?;
                if n_steps < 2 {
                    return Err(CliError::Config(format!(
                        "n_steps = {n_steps} must be at least 2"
                    )));
                }
            }
        }
        if self.model == Model::Polygon && self.targets.is_none() {
            return Err(CliError::Config("polygon model requires \"targets\"".into()));
        }
        Ok(())
    }

    pub fn n_states(&self) -> Result<usize, CliError> {
        match self.model {
            Model::Line => Ok(2),
            Model::Triangle => Ok(3),
            Model::Polygon => Ok(self
                .targets
                .as_ref()
                .expect("validated")
                .len()),
            Model::Poisson => Ok(self.targets.as_ref().map(Vec::len).unwrap_or(3)),
        }
    }

    pub fn switching_probs(&self) -> Result<SwitchingProbs, CliError> {
        let map = self
            .tau
            .as_ref()
            .ok_or_else(|| CliError::Config("missing \"tau\"".into()))?;
        SwitchingProbs::new(self.n_states()?, pairs_from_keys(map)?)
            .map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn wait_times(&self) -> Result<MeanWaitTimes, CliError> {
        let map = self
            .mu
            .as_ref()
            .ok_or_else(|| CliError::Config("missing \"mu\"".into()))?;
        MeanWaitTimes::new(self.n_states()?, pairs_from_keys(map)?)
            .map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn polygon_targets(&self) -> Result<PolygonTargets, CliError> {
        match (&self.model, &self.targets) {
            (Model::Line, _) => Err(CliError::Config(
                "the line model has no planar targets".into(),
            )),
            (Model::Triangle, None) => Ok(PolygonTargets::triangle()),
            (Model::Poisson, None) => Ok(PolygonTargets::triangle()),
            (Model::Polygon, None) => {
                Err(CliError::Config("polygon model requires \"targets\"".into()))
            }
            (_, Some(vertices)) => PolygonTargets::new(vertices.clone())
                .map_err(|e| CliError::Config(e.to_string())),
        }
    }

    pub fn start_point(&self, targets: &PolygonTargets) -> [f64; 2] {
        self.p0.unwrap_or_else(|| {
            if targets.vertices() == PolygonTargets::triangle().vertices() {
                [1.0 / 3.0, 1.0 / 3.0]
            } else {
                targets.centroid()
            }
        })
    }

    pub fn reference_estimates(&self) -> Result<Option<PairEstimates>, CliError> {
        let Some(estimator) = &self.estimator else {
            return Ok(None);
        };
        let Some(map) = &estimator.reference else {
            return Ok(None);
        };
        let pairs = pairs_from_keys(map)?;
        let n = pairs
            .iter()
            .map(|((i, j), _)| i.max(j) + 1)
            .max()
            .unwrap_or(0);
        Ok(Some(PairEstimates::from_pairs(n, pairs)))
    }
}
