//! The simulate, estimate, and denoise commands.

use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::json;

use buridan::denoise::{denoise_and_estimate, regression_state_detect, DenoiseMethod, Signal1D};
use buridan::estimators::{
    couplet_mean_frequency, couplet_mean_power, couplet_mean_variance, detect_states_line,
    detect_states_polygon, estimate_poisson_params, estimate_taus_from_states, mle_estimate,
    EstimationReport, GridSpec, StateSequence,
};
use buridan::io::{
    read_observations_csv, read_trajectory_csv, write_observations_csv, write_trajectory_csv,
};
use buridan::sim::{
    add_noise, simulate_line, simulate_poisson, simulate_polygon, ObservationSeries, Positions,
    Trajectory,
};

use crate::config::{EstimatorMethod, ExperimentConfig, Model};
use crate::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn write_manifest(
    out_dir: &Path,
    command: &str,
    detail: serde_json::Value,
    files: &[String],
) -> Result<(), CliError> {
    let manifest = json!({
        "command": command,
        "version": VERSION,
        "detail": detail,
        "outputs": files,
    });
    let path = out_dir.join("manifest.json");
    fs::write(&path, format!("{:#}\n", manifest))
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(())
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))
}

pub fn write_file(dir: &Path, name: &str, contents: &[u8]) -> Result<String, CliError> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(name.to_string())
}

fn simulate_one(config: &ExperimentConfig, seed: u64) -> Result<Trajectory, CliError> {
    let run = |r: buridan::Result<Trajectory>| r.map_err(CliError::from);
    match config.model {
        Model::Line => {
            let params = config.switching_probs()?;
            let x0 = config.x0.unwrap_or(0.5);
            run(simulate_line(
                &params,
                config.v,
                x0,
                config.n_steps.expect("validated"),
                seed,
            ))
        }
        Model::Triangle | Model::Polygon => {
            let params = config.switching_probs()?;
            let targets = config.polygon_targets()?;
            let p0 = config.start_point(&targets);
            run(simulate_polygon(
                &params,
                &targets,
                config.v,
                p0,
                config.n_steps.expect("validated"),
                seed,
            ))
        }
        Model::Poisson => {
            let params = config.wait_times()?;
            let targets = config.polygon_targets()?;
            let p0 = config.start_point(&targets);
            run(simulate_poisson(
                &params,
                &targets,
                config.v,
                p0,
                config.horizon.expect("validated"),
                config.sample_dt,
                seed,
            ))
        }
    }
}

/// Simulates one trajectory per seed; writes `traj_<seed>.csv` each, an
/// `obs_<seed>.csv` per seed when noise is configured, and a manifest.
pub fn cmd_simulate(config: &ExperimentConfig, out_dir: &Path) -> Result<(), CliError> {
    ensure_dir(out_dir)?;
    let runs: Vec<(u64, Trajectory, Option<ObservationSeries>)> = config
        .seeds
        .par_iter()
        .map(|&seed| {
            let traj = simulate_one(config, seed)?;
            let obs = if config.noise_sigma > 0.0 {
                // Noise stream is offset from the dynamics stream so the two
                // draws never share a seed.
                let noise_seed = seed.wrapping_add(1u64 << 32);
                Some(add_noise(&traj, config.noise_sigma, noise_seed).map_err(CliError::from)?)
            } else {
                None
            };
            Ok((seed, traj, obs))
        })
        .collect::<Result<_, CliError>>()?;

    let mut files = Vec::new();
    for (seed, traj, obs) in &runs {
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, traj)?;
        files.push(write_file(out_dir, &format!("traj_{seed}.csv"), &buf)?);
        if let Some(obs) = obs {
            let mut buf = Vec::new();
            write_observations_csv(&mut buf, obs)?;
            files.push(write_file(out_dir, &format!("obs_{seed}.csv"), &buf)?);
        }
    }
    write_manifest(
        out_dir,
        "simulate",
        json!({"config": config, "noise_seed_offset": u64::from(1u32) << 32}),
        &files,
    )?;
    println!("wrote {} files to {}", files.len(), out_dir.display());
    Ok(())
}

fn read_positions(path: &Path) -> Result<ObservationSeries, CliError> {
    let file =
        fs::File::open(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    read_observations_csv(BufReader::new(file)).map_err(CliError::from)
}

fn estimate_one(
    config: &ExperimentConfig,
    input: &Path,
) -> Result<EstimationReport, CliError> {
    let estimator = config
        .estimator
        .as_ref()
        .ok_or_else(|| CliError::Config("estimate requires an \"estimator\" block".into()))?;
    let method = estimator.method;
    let obs = read_positions(input)?;
    let mismatch = |want: &str| {
        CliError::Config(format!(
            "estimator {method:?} needs {want}, but {} holds {}-dimensional data",
            input.display(),
            obs.positions.dim()
        ))
    };

    let mut report = match method {
        EstimatorMethod::MeanFrequency => {
            let xs = obs.positions.as_d1().ok_or_else(|| mismatch("line data"))?;
            couplet_mean_frequency(xs)?
        }
        EstimatorMethod::MeanVariance => {
            let xs = obs.positions.as_d1().ok_or_else(|| mismatch("line data"))?;
            couplet_mean_variance(xs, config.v)?
        }
        EstimatorMethod::MeanPower => {
            let xs = obs.positions.as_d1().ok_or_else(|| mismatch("line data"))?;
            couplet_mean_power(xs, config.v)?
        }
        EstimatorMethod::Mle => {
            let xs = obs.positions.as_d1().ok_or_else(|| mismatch("line data"))?;
            let grid = estimator
                .mle
                .as_ref()
                .map(|m| m.to_grid_spec())
                .unwrap_or_else(GridSpec::default);
            mle_estimate(xs, config.v, &grid)?
        }
        EstimatorMethod::StateDetection => {
            let seq = match &obs.positions {
                Positions::D1(xs) => detect_states_line(xs)?,
                Positions::D2(ps) => detect_states_polygon(ps, &config.polygon_targets()?)?,
            };
            EstimationReport::new(
                buridan::estimators::Method::StateDetection,
                estimate_taus_from_states(&seq)?,
            )
        }
        EstimatorMethod::Regression => {
            let ps = obs
                .positions
                .as_d2()
                .ok_or_else(|| mismatch("planar data"))?;
            let window = estimator.window.unwrap_or(1);
            let seq = regression_state_detect(ps, &config.polygon_targets()?, window)?;
            EstimationReport::new(
                buridan::estimators::Method::StateDetection,
                estimate_taus_from_states(&seq)?,
            )
            .with_pipeline(DenoiseMethod::Regression { window }.label())
        }
        EstimatorMethod::Denoise => {
            let ps = obs
                .positions
                .as_d2()
                .ok_or_else(|| mismatch("planar data"))?;
            let denoiser = estimator.denoiser.as_ref().ok_or_else(|| {
                CliError::Config("method \"denoise\" requires a \"denoiser\" block".into())
            })?;
            denoise_and_estimate(ps, &config.polygon_targets()?, denoiser, None)?
        }
        EstimatorMethod::Poisson => {
            let file = fs::File::open(input)
                .map_err(|e| CliError::Io(format!("{}: {e}", input.display())))?;
            let traj = read_trajectory_csv(BufReader::new(file))?;
            let n_states = traj.states.iter().max().map_or(1, |&m| m + 1).max(2);
            let seq = StateSequence::new(traj.states.clone(), n_states)?;
            EstimationReport::new(
                buridan::estimators::Method::Poisson,
                estimate_poisson_params(&seq, &traj.times)?,
            )
        }
    };
    if let Some(reference) = config.reference_estimates()? {
        report = report.with_reference(reference);
    }
    Ok(report)
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

fn aggregate_reports(reports: &[EstimationReport]) -> serde_json::Value {
    let mut keys: Vec<(usize, usize)> = Vec::new();
    for r in reports {
        for (k, _) in r.estimates.pairs() {
            if !keys.contains(&k) {
                keys.push(k);
            }
        }
    }
    keys.sort();
    let mut per_parameter = serde_json::Map::new();
    for (i, j) in keys {
        let mut values: Vec<f64> = reports
            .iter()
            .filter_map(|r| r.estimates.get(i, j))
            .collect();
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if values.is_empty() {
            continue;
        }
        let q1 = quantile(&values, 0.25);
        let q3 = quantile(&values, 0.75);
        per_parameter.insert(
            format!("{i}{j}"),
            json!({
                "n": values.len(),
                "median": quantile(&values, 0.5),
                "q1": q1,
                "q3": q3,
                "iqr": q3 - q1,
            }),
        );
    }
    json!({ "n_reports": reports.len(), "per_parameter": per_parameter })
}

/// Runs the configured estimator over every input file, writing one report
/// per input, an aggregate (median and IQR per parameter), and a manifest.
pub fn cmd_estimate(
    config: &ExperimentConfig,
    inputs: &[PathBuf],
    out_dir: &Path,
) -> Result<(), CliError> {
    if inputs.is_empty() {
        return Err(CliError::Config("estimate needs at least one input file".into()));
    }
    ensure_dir(out_dir)?;
    let mut files = Vec::new();
    let mut reports = Vec::new();
    for input in inputs {
        let report = estimate_one(config, input)?;
        let stem = input
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("input");
        files.push(write_file(
            out_dir,
            &format!("report_{stem}.json"),
            report.to_json()?.as_bytes(),
        )?);
        reports.push(report);
    }
    let aggregate = aggregate_reports(&reports);
    files.push(write_file(
        out_dir,
        "aggregate.json",
        format!("{aggregate:#}\n").as_bytes(),
    )?);
    write_manifest(
        out_dir,
        "estimate",
        json!({"config": config, "inputs": inputs}),
        &files,
    )?;
    println!("wrote {} files to {}", files.len(), out_dir.display());
    Ok(())
}

/// Applies the configured denoiser to each coordinate of every input file
/// and writes series of identical shape.
pub fn cmd_denoise(
    config: &ExperimentConfig,
    inputs: &[PathBuf],
    out_dir: &Path,
) -> Result<(), CliError> {
    if inputs.is_empty() {
        return Err(CliError::Config("denoise needs at least one input file".into()));
    }
    let denoiser = config
        .estimator
        .as_ref()
        .and_then(|e| e.denoiser.as_ref())
        .ok_or_else(|| {
            CliError::Config("denoise requires estimator.denoiser in the config".into())
        })?;
    if matches!(denoiser, DenoiseMethod::Regression { .. }) {
        return Err(CliError::Config(
            "regression is a detector; pick a per-coordinate denoiser".into(),
        ));
    }
    ensure_dir(out_dir)?;
    let mut files = Vec::new();
    for input in inputs {
        let obs = read_positions(input)?;
        let positions = match &obs.positions {
            Positions::D1(xs) => {
                let out = denoiser.apply(&Signal1D::from_values(xs.clone())?)?;
                Positions::D1(out.values)
            }
            Positions::D2(ps) => {
                let xs: Vec<f64> = ps.iter().map(|p| p[0]).collect();
                let ys: Vec<f64> = ps.iter().map(|p| p[1]).collect();
                let dx = denoiser.apply(&Signal1D::from_values(xs)?)?;
                let dy = denoiser.apply(&Signal1D::from_values(ys)?)?;
                Positions::D2(
                    dx.values
                        .iter()
                        .zip(&dy.values)
                        .map(|(&x, &y)| [x, y])
                        .collect(),
                )
            }
        };
        let denoised = ObservationSeries {
            times: obs.times.clone(),
            positions,
        };
        let stem = input
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("input");
        let mut buf = Vec::new();
        write_observations_csv(&mut buf, &denoised)?;
        files.push(write_file(out_dir, &format!("denoised_{stem}.csv"), &buf)?);
    }
    write_manifest(
        out_dir,
        "denoise",
        json!({"config": config, "inputs": inputs}),
        &files,
    )?;
    println!("wrote {} files to {}", files.len(), out_dir.display());
    Ok(())
}
