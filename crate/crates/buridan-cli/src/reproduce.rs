//! `reproduce`: regenerate the benchmark tables and figure data as CSV.
//!
//! Each artifact is written with fixed, documented seeds so repeated runs
//! are byte-identical. Replicate-heavy artifacts default to a desk scale;
//! `--full` switches to the benchmark scale.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde_json::json;

use buridan::denoise::{
    denoise_and_estimate, dft_magnitude, DenoiseMethod, Signal1D,
};
use buridan::estimators::{
    couplet_mean_frequency, couplet_mean_power, couplet_mean_variance, detect_states_line,
    detect_states_polygon, estimate_taus_from_states, mle_estimate, negative_log_likelihood,
    EstimationReport, GridSpec, PairEstimates,
};
use buridan::markov::{count_stationary_monomials, SwitchingProbs};
use buridan::sim::{add_noise, simulate_line, simulate_polygon, PolygonTargets, Trajectory};

use crate::commands::{write_file, write_manifest};
use crate::CliError;

const LINE_TAU: (f64, f64) = (0.005, 0.008);
const LINE_SPEED: f64 = 0.1;
const TRIANGLE_SPEED: f64 = 0.01;
const NOISE_SIGMA: f64 = 0.01;
const NOISY_SEED: u64 = 1000;

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
    .expect("valid parameters")
}

fn triangle_inputs() -> Vec<((usize, usize), f64)> {
    triangle_params().pairs().collect()
}

fn simulate_triangle(n_steps: usize, seed: u64) -> Trajectory {
    simulate_polygon(
        &triangle_params(),
        &PolygonTargets::triangle(),
        TRIANGLE_SPEED,
        [1.0 / 3.0, 1.0 / 3.0],
        n_steps,
        seed,
    )
    .expect("valid triangle run")
}

/// Noiseless detected estimates: the reference column of the noisy tables.
fn observed_reference(traj: &Trajectory) -> PairEstimates {
    let seq = detect_states_polygon(
        traj.positions.as_d2().expect("planar"),
        &PolygonTargets::triangle(),
    )
    .expect("detectable");
    estimate_taus_from_states(&seq).expect("nonempty")
}

/// Input-vs-observed tables for the line (t1) and triangle (t2) models.
fn observed_vs_input(
    out_dir: &Path,
    id: &str,
    runs: impl Fn(usize, u64) -> PairEstimates,
    inputs: &[((usize, usize), f64)],
) -> Result<Vec<String>, CliError> {
    let seeds = [7u64, 8];
    let small = runs(10_000, seeds[0]);
    let large = runs(100_000, seeds[1]);
    let mut csv = String::from("param,input,observed_n10000,observed_n100000\n");
    for ((i, j), input) in inputs {
        let _ = writeln!(
            csv,
            "{i}{j},{input},{},{}",
            small.get(*i, *j).map_or(f64::NAN, |v| v),
            large.get(*i, *j).map_or(f64::NAN, |v| v),
        );
    }
    Ok(vec![write_file(out_dir, &format!("{id}.csv"), csv.as_bytes())?])
}

fn line_detection_estimates(n_steps: usize, seed: u64) -> PairEstimates {
    let params = SwitchingProbs::two_state(LINE_TAU.0, LINE_TAU.1).expect("valid");
    let traj = simulate_line(&params, LINE_SPEED, 0.5, n_steps, seed).expect("valid run");
    let seq = detect_states_line(traj.positions.as_d1().expect("line")).expect("detectable");
    estimate_taus_from_states(&seq).expect("nonempty")
}

fn triangle_detection_estimates(n_steps: usize, seed: u64) -> PairEstimates {
    observed_reference(&simulate_triangle(n_steps, seed))
}

/// Shared setup of the noisy-benchmark tables: one noisy realization of the
/// 10^4-step triangle run.
fn noisy_benchmark() -> (Vec<[f64; 2]>, PairEstimates) {
    let traj = simulate_triangle(10_000, NOISY_SEED);
    let reference = observed_reference(&traj);
    let obs = add_noise(&traj, NOISE_SIGMA, NOISY_SEED + 1).expect("valid sigma");
    (obs.positions.as_d2().expect("planar").to_vec(), reference)
}

fn report_rows(csv: &mut String, report: &EstimationReport, reference: &PairEstimates) {
    for ((i, j), input) in triangle_inputs() {
        let observed = reference.get(i, j).unwrap_or(f64::NAN);
        let estimate = report.estimates.get(i, j).unwrap_or(f64::NAN);
        let rel = report
            .relative_errors
            .as_ref()
            .and_then(|m| m.get(&(i, j)).copied())
            .unwrap_or(f64::NAN);
        let _ = writeln!(
            csv,
            "{i}{j},{input},{observed},{estimate},{}",
            100.0 * rel
        );
    }
}

/// t3: windowed linear-regression detection on the noisy benchmark.
fn regression_windows(out_dir: &Path) -> Result<Vec<String>, CliError> {
    let (noisy, reference) = noisy_benchmark();
    let mut csv = String::from("window,param,input,observed,estimate,relative_error_percent\n");
    for window in [1usize, 3, 5, 10, 15, 20] {
        let report = denoise_and_estimate(
            &noisy,
            &PolygonTargets::triangle(),
            &DenoiseMethod::Regression { window },
            Some(&reference),
        )?;
        for ((i, j), input) in triangle_inputs() {
            let observed = reference.get(i, j).unwrap_or(f64::NAN);
            let estimate = report.estimates.get(i, j).unwrap_or(f64::NAN);
            let rel = report
                .relative_errors
                .as_ref()
                .and_then(|m| m.get(&(i, j)).copied())
                .unwrap_or(f64::NAN);
            let _ = writeln!(
                csv,
                "{window},{i}{j},{input},{observed},{estimate},{}",
                100.0 * rel
            );
        }
    }
    Ok(vec![write_file(out_dir, "t3.csv", csv.as_bytes())?])
}

/// t4-t7: one denoiser each on the same noisy benchmark.
fn denoiser_table(out_dir: &Path, id: &str, method: DenoiseMethod) -> Result<Vec<String>, CliError> {
    let (noisy, reference) = noisy_benchmark();
    let report = denoise_and_estimate(
        &noisy,
        &PolygonTargets::triangle(),
        &method,
        Some(&reference),
    )?;
    let mut csv = String::from("param,input,observed,estimate,relative_error_percent\n");
    report_rows(&mut csv, &report, &reference);
    Ok(vec![write_file(out_dir, &format!("{id}.csv"), csv.as_bytes())?])
}

/// t8: symbolic monomial counts of the stationary-vector coordinates.
fn monomial_table(out_dir: &Path) -> Result<Vec<String>, CliError> {
    let mut csv = String::from("n_states,monomials\n");
    for n in 2..=5 {
        let _ = writeln!(csv, "{n},{}", count_stationary_monomials(n)?);
    }
    Ok(vec![write_file(out_dir, "t8.csv", csv.as_bytes())?])
}

fn couplet_estimates(xs: &[f64]) -> [Option<(f64, f64)>; 3] {
    let pick = |r: buridan::Result<EstimationReport>| {
        r.ok().and_then(|rep| {
            Some((rep.estimates.get(0, 1)?, rep.estimates.get(1, 0)?))
        })
    };
    [
        pick(couplet_mean_frequency(xs)),
        pick(couplet_mean_variance(xs, LINE_SPEED)),
        pick(couplet_mean_power(xs, LINE_SPEED)),
    ]
}

/// boxplots: couplet residuals across the parameter grid and run lengths.
fn boxplot_data(out_dir: &Path, full: bool) -> Result<Vec<String>, CliError> {
    let (grid_n, n_seeds) = if full { (19, 20) } else { (5, 5) };
    let grid: Vec<f64> = (0..grid_n)
        .map(|k| 0.01 + 0.09 * k as f64 / (grid_n - 1) as f64)
        .collect();
    let step_counts = [1000usize, 5000, 20_000];
    let methods = ["mean_frequency", "mean_variance", "mean_power"];

    let mut cases = Vec::new();
    for &t01 in &grid {
        for &t10 in &grid {
            for &n_steps in &step_counts {
                for seed in 0..n_seeds {
                    cases.push((t01, t10, n_steps, seed as u64));
                }
            }
        }
    }
    let rows: Vec<String> = cases
        .par_iter()
        .map(|&(t01, t10, n_steps, seed)| {
            let params = SwitchingProbs::two_state(t01, t10).expect("grid in range");
            let traj = simulate_line(&params, LINE_SPEED, 0.5, n_steps, 4000 + seed)
                .expect("valid run");
            let estimates = couplet_estimates(traj.positions.as_d1().expect("line"));
            let mut out = String::new();
            for (m, est) in methods.iter().zip(estimates) {
                if let Some((e01, e10)) = est {
                    let _ = writeln!(
                        out,
                        "{m},01,{n_steps},{t01},{t10},{seed},{}",
                        e01 - t01
                    );
                    let _ = writeln!(
                        out,
                        "{m},10,{n_steps},{t01},{t10},{seed},{}",
                        e10 - t10
                    );
                }
            }
            out
        })
        .collect();
    let mut csv = String::from("method,param,n_steps,tau01,tau10,seed,residual\n");
    for r in rows {
        csv.push_str(&r);
    }
    Ok(vec![write_file(out_dir, "boxplots.csv", csv.as_bytes())?])
}

/// surfaces: mean absolute mean/frequency-couplet error per grid cell.
fn surface_data(out_dir: &Path, full: bool) -> Result<Vec<String>, CliError> {
    let (grid_n, n_seeds, n_steps) = if full { (19, 20, 20_000) } else { (5, 5, 20_000) };
    let grid: Vec<f64> = (0..grid_n)
        .map(|k| 0.01 + 0.09 * k as f64 / (grid_n - 1) as f64)
        .collect();
    let mut cells = Vec::new();
    for &t01 in &grid {
        for &t10 in &grid {
            cells.push((t01, t10));
        }
    }
    let rows: Vec<String> = cells
        .par_iter()
        .map(|&(t01, t10)| {
            let params = SwitchingProbs::two_state(t01, t10).expect("grid in range");
            let mut e01 = 0.0;
            let mut e10 = 0.0;
            let mut used = 0usize;
            for seed in 0..n_seeds as u64 {
                let traj = simulate_line(&params, LINE_SPEED, 0.5, n_steps, 5000 + seed)
                    .expect("valid run");
                if let Ok(report) =
                    couplet_mean_frequency(traj.positions.as_d1().expect("line"))
                {
                    e01 += (report.estimates.get(0, 1).expect("pair") - t01).abs();
                    e10 += (report.estimates.get(1, 0).expect("pair") - t10).abs();
                    used += 1;
                }
            }
            format!(
                "{t01},{t10},{},{}\n",
                e01 / used as f64,
                e10 / used as f64
            )
        })
        .collect();
    let mut csv = String::from("tau01,tau10,mean_abs_error_01,mean_abs_error_10\n");
    for r in rows {
        csv.push_str(&r);
    }
    Ok(vec![write_file(out_dir, "surfaces.csv", csv.as_bytes())?])
}

/// likelihood: the negative log-likelihood surface of one 10^4-step run at
/// tau = (0.05, 0.08), v = 0.1, plus its minimizer.
fn likelihood_surface(out_dir: &Path) -> Result<Vec<String>, CliError> {
    let params = SwitchingProbs::two_state(0.05, 0.08).expect("valid");
    let traj = simulate_line(&params, LINE_SPEED, 0.5, 10_000, 21).expect("valid run");
    let xs = traj.positions.as_d1().expect("line");
    let axis: Vec<f64> = (0..50)
        .map(|k| (1e-3f64.ln() + (0.5f64 / 1e-3).ln() * k as f64 / 49.0).exp())
        .collect();
    let mut csv = String::from("tau01_hat,tau10_hat,nll\n");
    for &a in &axis {
        for &b in &axis {
            let nll = negative_log_likelihood(xs, a, b, LINE_SPEED)?;
            let _ = writeln!(csv, "{a},{b},{nll}");
        }
    }
    let mut files = vec![write_file(out_dir, "likelihood.csv", csv.as_bytes())?];
    let report = mle_estimate(xs, LINE_SPEED, &GridSpec::default())?;
    files.push(write_file(
        out_dir,
        "likelihood_min.json",
        report.to_json()?.as_bytes(),
    )?);
    Ok(files)
}

/// frequencies: a noiseless x-coordinate trace and its DFT magnitude.
fn frequency_data(out_dir: &Path) -> Result<Vec<String>, CliError> {
    let traj = simulate_triangle(10_000, 1);
    let xs: Vec<f64> = traj
        .positions
        .as_d2()
        .expect("planar")
        .iter()
        .map(|p| p[0])
        .collect();
    let mut traj_csv = String::from("t,x\n");
    for (t, x) in traj.times.iter().zip(&xs) {
        let _ = writeln!(traj_csv, "{t},{x}");
    }
    let mags = dft_magnitude(&Signal1D::from_values(xs).map_err(CliError::from)?);
    let mut dft_csv = String::from("bin,magnitude\n");
    for (w, m) in mags.iter().enumerate() {
        let _ = writeln!(dft_csv, "{w},{m}");
    }
    Ok(vec![
        write_file(out_dir, "frequencies_x.csv", traj_csv.as_bytes())?,
        write_file(out_dir, "frequencies_dft.csv", dft_csv.as_bytes())?,
    ])
}

pub fn cmd_reproduce(table_id: &str, out_dir: &Path, full: bool) -> Result<(), CliError> {
    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Io(format!("{}: {e}", out_dir.display())))?;
    let files = match table_id {
        "t1" => observed_vs_input(
            out_dir,
            "t1",
            line_detection_estimates,
            &[((0, 1), LINE_TAU.0), ((1, 0), LINE_TAU.1)],
        )?,
        "t2" => observed_vs_input(
            out_dir,
            "t2",
            triangle_detection_estimates,
            &triangle_inputs(),
        )?,
        "t3" => regression_windows(out_dir)?,
        "t4" => denoiser_table(
            out_dir,
            "t4",
            DenoiseMethod::Lwpr {
                h: 0.005,
                degree: 2,
            },
        )?,
        "t5" => denoiser_table(out_dir, "t5", DenoiseMethod::Wavelet { levels: 6 })?,
        "t6" => denoiser_table(
            out_dir,
            "t6",
            DenoiseMethod::Butterworth {
                order: 5,
                cutoff_bins: 100.0,
            },
        )?,
        "t7" => denoiser_table(
            out_dir,
            "t7",
            DenoiseMethod::Tv {
                gamma: 0.5,
                lambda: 20.0,
                n_iters: 10,
            },
        )?,
        "t8" => monomial_table(out_dir)?,
        "boxplots" => boxplot_data(out_dir, full)?,
        "surfaces" => surface_data(out_dir, full)?,
        "likelihood" => likelihood_surface(out_dir)?,
        "frequencies" => frequency_data(out_dir)?,
        other => {
            return Err(CliError::Config(format!(
                "unknown artifact {other:?}; expected t1..t8, boxplots, surfaces, likelihood, or frequencies"
            )))
        }
    };
    write_manifest(
        out_dir,
        "reproduce",
        json!({"artifact": table_id, "full": full}),
        &files,
    )?;
    println!("wrote {} files to {}", files.len(), out_dir.display());
    Ok(())
}
