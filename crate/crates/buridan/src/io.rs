//! CSV serialization of trajectories and observation series.
//!
//! Trajectory files carry `t,x[,y],state` with one row per sample;
//! observation files carry `t,x[,y]`. Floating-point fields are written
//! with 17 significant digits, so values round-trip bit-exactly.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::sim::{ObservationSeries, Positions, Trajectory};

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_trajectory_csv<W: Write>(mut w: W, traj: &Trajectory) -> Result<()> {
    match &traj.positions {
        Positions::D1(xs) => {
            writeln!(w, "t,x,state")?;
            for ((t, x), s) in traj.times.iter().zip(xs).zip(&traj.states) {
                writeln!(w, "{},{},{}", fmt(*t), fmt(*x), s)?;
            }
        }
        Positions::D2(ps) => {
            writeln!(w, "t,x,y,state")?;
            for ((t, p), s) in traj.times.iter().zip(ps).zip(&traj.states) {
                writeln!(w, "{},{},{},{}", fmt(*t), fmt(p[0]), fmt(p[1]), s)?;
            }
        }
    }
    Ok(())
}

pub fn write_observations_csv<W: Write>(mut w: W, obs: &ObservationSeries) -> Result<()> {
    match &obs.positions {
        Positions::D1(xs) => {
            writeln!(w, "t,x")?;
            for (t, x) in obs.times.iter().zip(xs) {
                writeln!(w, "{},{}", fmt(*t), fmt(*x))?;
            }
        }
        Positions::D2(ps) => {
            writeln!(w, "t,x,y")?;
            for (t, p) in obs.times.iter().zip(ps) {
                writeln!(w, "{},{},{}", fmt(*t), fmt(p[0]), fmt(p[1]))?;
            }
        }
    }
    Ok(())
}

/// Parsed rows of a trajectory CSV. The speed and model tag are not part of
/// the file format; callers supply them from their own configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryCsv {
    pub times: Vec<f64>,
    pub positions: Positions,
    pub states: Vec<usize>,
}

fn parse_f64(field: &str, line: usize) -> Result<f64> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::Csv(format!("line {line}: bad float {field:?}")))
}

fn parse_state(field: &str, line: usize) -> Result<usize> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::Csv(format!("line {line}: bad state {field:?}")))
}

pub fn read_trajectory_csv<R: BufRead>(r: R) -> Result<TrajectoryCsv> {
    let mut lines = r.lines().enumerate();
    let header = match lines.next() {
        Some((_, line)) => line?,
        None => return Err(Error::Csv("empty file".into())),
    };
    let dim = match header.trim() {
        "t,x,state" => 1,
        "t,x,y,state" => 2,
        other => {
            return Err(Error::Csv(format!(
                "unexpected trajectory header {other:?}"
            )))
        }
    };
    let mut times = Vec::new();
    let mut xs = Vec::new();
    let mut ps = Vec::new();
    let mut states = Vec::new();
    for (idx, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != dim + 2 {
            return Err(Error::Csv(format!(
                "line {}: expected {} fields, got {}",
                idx + 1,
                dim + 2,
                fields.len()
            )));
        }
        times.push(parse_f64(fields[0], idx + 1)?);
        if dim == 1 {
            xs.push(parse_f64(fields[1], idx + 1)?);
        } else {
            ps.push([
                parse_f64(fields[1], idx + 1)?,
                parse_f64(fields[2], idx + 1)?,
            ]);
        }
        states.push(parse_state(fields[dim + 1], idx + 1)?);
    }
    let positions = if dim == 1 {
        Positions::D1(xs)
    } else {
        Positions::D2(ps)
    };
    if positions.is_empty() {
        return Err(Error::Csv("trajectory file has no data rows".into()));
    }
    Ok(TrajectoryCsv {
        times,
        positions,
        states,
    })
}

/// Reads an observation CSV. Files with a trailing `state` column are
/// accepted and the states are dropped.
pub fn read_observations_csv<R: BufRead>(r: R) -> Result<ObservationSeries> {
    let mut lines = r.lines().enumerate();
    let header = match lines.next() {
        Some((_, line)) => line?,
        None => return Err(Error::Csv("empty file".into())),
    };
    let (dim, has_state) = match header.trim() {
        "t,x" => (1, false),
        "t,x,y" => (2, false),
        "t,x,state" => (1, true),
        "t,x,y,state" => (2, true),
        other => {
            return Err(Error::Csv(format!(
                "unexpected observations header {other:?}"
            )))
        }
    };
    let expected = dim + 1 + usize::from(has_state);
    let mut times = Vec::new();
    let mut xs = Vec::new();
    let mut ps = Vec::new();
    for (idx, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != expected {
            return Err(Error::Csv(format!(
                "line {}: expected {expected} fields, got {}",
                idx + 1,
                fields.len()
            )));
        }
        times.push(parse_f64(fields[0], idx + 1)?);
        if dim == 1 {
            xs.push(parse_f64(fields[1], idx + 1)?);
        } else {
            ps.push([
                parse_f64(fields[1], idx + 1)?,
                parse_f64(fields[2], idx + 1)?,
            ]);
        }
    }
    let positions = if dim == 1 {
        Positions::D1(xs)
    } else {
        Positions::D2(ps)
    };
    if positions.is_empty() {
        return Err(Error::Csv("observations file has no data rows".into()));
    }
    Ok(ObservationSeries { times, positions })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markov::SwitchingProbs;
    use crate::sim::{add_noise, simulate_line, simulate_polygon, PolygonTargets};

    #[test]
    fn trajectory_round_trip_is_exact() {
        let params = SwitchingProbs::two_state(0.05, 0.08).unwrap();
        let traj = simulate_line(&params, 0.1, 0.5, 200, 1).unwrap();
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, &traj).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,x,state\n"));
        let back = read_trajectory_csv(buf.as_slice()).unwrap();
        assert_eq!(back.times, traj.times);
        assert_eq!(back.positions, traj.positions);
        assert_eq!(back.states, traj.states);
    }

    #[test]
    fn two_dimensional_round_trip_is_exact() {
        let params = SwitchingProbs::new(3, [((0, 1), 0.1), ((1, 2), 0.2), ((2, 0), 0.3)])
            .unwrap();
        let traj = simulate_polygon(
            &params,
            &PolygonTargets::triangle(),
            0.05,
            [0.3, 0.3],
            100,
            2,
        )
        .unwrap();
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, &traj).unwrap();
        let back = read_trajectory_csv(buf.as_slice()).unwrap();
        assert_eq!(back.positions, traj.positions);

        let obs = add_noise(&traj, 0.01, 3).unwrap();
        let mut buf = Vec::new();
        write_observations_csv(&mut buf, &obs).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,x,y\n"));
        let back = read_observations_csv(buf.as_slice()).unwrap();
        assert_eq!(back, obs);
    }

    #[test]
    fn observations_reader_accepts_trajectory_files() {
        let params = SwitchingProbs::two_state(0.05, 0.08).unwrap();
        let traj = simulate_line(&params, 0.1, 0.5, 50, 4).unwrap();
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, &traj).unwrap();
        let obs = read_observations_csv(buf.as_slice()).unwrap();
        assert_eq!(obs.positions, traj.positions);
    }

    #[test]
    fn malformed_input_is_rejected() {
        assert!(read_trajectory_csv("".as_bytes()).is_err());
        assert!(read_trajectory_csv("a,b,c\n".as_bytes()).is_err());
        assert!(read_trajectory_csv("t,x,state\n1.0,oops,0\n".as_bytes()).is_err());
        assert!(read_trajectory_csv("t,x,state\n1.0,0.5\n".as_bytes()).is_err());
        assert!(read_observations_csv("t,x\n".as_bytes()).is_err());
    }
}
