//! Simulation of the switching dynamics.
//!
//! Between switches the particle relaxes exponentially toward its current
//! target: the one-dimensional model contracts toward 0 or 1, the polygon
//! model toward one of the polygon's vertices. The closed-form update
//! `p <- g + (p - g) * exp(-v * dt)` is the exact solution of the linear
//! drift, so no integrator bias enters downstream statistics.
//!
//! Switching comes in two flavours: the discrete model redraws the state at
//! unit time boundaries with probabilities `tau_ij`, and the continuous-time
//! model runs competing exponential clocks with mean waiting times `mu_ij`.
//!
//! Every simulation owns one `ChaCha8` generator seeded from the caller's
//! seed, so identical inputs give bit-identical trajectories. Draw order:
//! the discrete models draw one uniform per unit boundary (after the
//! position update of the step); the Poisson model draws the competing
//! exponentials per event in ascending destination order; noise injection
//! draws per sample time, coordinate-major x then y.

use std::collections::BTreeMap;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};

use crate::error::{Error, Result};
use crate::markov::SwitchingProbs;

/// Attraction targets in convex position.
///
/// Vertex order is significant: state `i` pursues `vertices[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolygonTargets {
    vertices: Vec<[f64; 2]>,
}

impl PolygonTargets {
    pub fn new(vertices: Vec<[f64; 2]>) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::InvalidParameters(
                "at least two target vertices required".into(),
            ));
        }
        for (a, pa) in vertices.iter().enumerate() {
            if !pa.iter().all(|c| c.is_finite()) {
                return Err(Error::InvalidParameters(format!(
                    "vertex {a} has a non-finite coordinate"
                )));
            }
            for (b, pb) in vertices.iter().enumerate().skip(a + 1) {
                if dist2(*pa, *pb) < 1e-24 {
                    return Err(Error::InvalidParameters(format!(
                        "vertices {a} and {b} coincide"
                    )));
                }
            }
        }
        if vertices.len() >= 3 && !in_strictly_convex_position(&vertices) {
            return Err(Error::InvalidParameters(
                "target vertices are not in convex position".into(),
            ));
        }
        Ok(Self { vertices })
    }

    /// The unit right triangle with vertices (0,0), (1,0), (0,1).
    pub fn triangle() -> Self {
        Self::new(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).expect("valid triangle")
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Arithmetic mean of the vertices; interior for any convex target set.
    pub fn centroid(&self) -> [f64; 2] {
        let n = self.vertices.len() as f64;
        let mut c = [0.0, 0.0];
        for v in &self.vertices {
            c[0] += v[0] / n;
            c[1] += v[1] / n;
        }
        c
    }

    /// Whether `p` lies strictly inside the open convex hull of the targets.
    /// For two targets the hull is the open segment between them.
    pub fn contains_interior(&self, p: [f64; 2]) -> bool {
        if self.vertices.len() == 2 {
            let (a, b) = (self.vertices[0], self.vertices[1]);
            let d = [b[0] - a[0], b[1] - a[1]];
            let r = [p[0] - a[0], p[1] - a[1]];
            let len2 = d[0] * d[0] + d[1] * d[1];
            let cross = d[0] * r[1] - d[1] * r[0];
            let t = (d[0] * r[0] + d[1] * r[1]) / len2;
            return cross.abs() <= 1e-9 * len2 && t > 0.0 && t < 1.0;
        }
        let order = ccw_order(&self.vertices);
        for k in 0..order.len() {
            let a = self.vertices[order[k]];
            let b = self.vertices[order[(k + 1) % order.len()]];
            let cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
            if cross <= 0.0 {
                return false;
            }
        }
        true
    }
}

fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

/// Vertex indices ordered counterclockwise around the centroid.
fn ccw_order(vertices: &[[f64; 2]]) -> Vec<usize> {
    let n = vertices.len() as f64;
    let cx = vertices.iter().map(|v| v[0]).sum::<f64>() / n;
    let cy = vertices.iter().map(|v| v[1]).sum::<f64>() / n;
    let mut order: Vec<usize> = (0..vertices.len()).collect();
    order.sort_by(|&a, &b| {
        let ta = (vertices[a][1] - cy).atan2(vertices[a][0] - cx);
        let tb = (vertices[b][1] - cy).atan2(vertices[b][0] - cx);
        ta.partial_cmp(&tb).unwrap()
    });
    order
}

/// All vertices are corners of their own convex hull (strict turns only).
fn in_strictly_convex_position(vertices: &[[f64; 2]]) -> bool {
    let order = ccw_order(vertices);
    let m = order.len();
    for k in 0..m {
        let a = vertices[order[k]];
        let b = vertices[order[(k + 1) % m]];
        let c = vertices[order[(k + 2) % m]];
        let cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
        if cross <= 0.0 {
            return false;
        }
    }
    true
}

/// Mean waiting times `mu_ij` of the continuous-time switching model: the
/// dwell before a transition `i -> j` is exponential with mean `mu_ij`, and
/// the clocks of all destinations compete.
///
/// Every ordered pair must be present with `0 < mu_ij < infinity`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanWaitTimes {
    n_states: usize,
    mu: BTreeMap<(usize, usize), f64>,
}

impl MeanWaitTimes {
    pub fn new(
        n_states: usize,
        pairs: impl IntoIterator<Item = ((usize, usize), f64)>,
    ) -> Result<Self> {
        if n_states < 2 {
            return Err(Error::InvalidParameters(
                "continuous-time model needs at least two states".into(),
            ));
        }
        let mut mu = BTreeMap::new();
        for ((i, j), m) in pairs {
            if i == j || i >= n_states || j >= n_states {
                return Err(Error::InvalidParameters(format!(
                    "pair ({i},{j}) invalid for {n_states} states"
                )));
            }
            if !(m > 0.0 && m.is_finite()) {
                return Err(Error::InvalidParameters(format!(
                    "mu_{i}{j} = {m} must be positive and finite"
                )));
            }
            mu.insert((i, j), m);
        }
        for i in 0..n_states {
            for j in 0..n_states {
                if i != j && !mu.contains_key(&(i, j)) {
                    return Err(Error::InvalidParameters(format!(
                        "missing mean waiting time for pair ({i},{j})"
                    )));
                }
            }
        }
        Ok(Self { n_states, mu })
    }

    pub fn two_state(mu01: f64, mu10: f64) -> Result<Self> {
        Self::new(2, [((0, 1), mu01), ((1, 0), mu10)])
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn mu(&self, i: usize, j: usize) -> f64 {
        self.mu[&(i, j)]
    }

    pub fn pairs(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        self.mu.iter().map(|(&k, &v)| (k, v))
    }

    /// Expected dwell in state `i` before any transition:
    /// `(sum_j 1/mu_ij)^-1`.
    pub fn mean_holding(&self, i: usize) -> f64 {
        let rate: f64 = (0..self.n_states)
            .filter(|&j| j != i)
            .map(|j| 1.0 / self.mu(i, j))
            .sum();
        1.0 / rate
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    DiscreteMarkov,
    Poisson,
}

/// Positions of a trajectory, one or two dimensional.
#[derive(Debug, Clone, PartialEq)]
pub enum Positions {
    D1(Vec<f64>),
    D2(Vec<[f64; 2]>),
}

impl Positions {
    pub fn len(&self) -> usize {
        match self {
            Positions::D1(v) => v.len(),
            Positions::D2(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        match self {
            Positions::D1(_) => 1,
            Positions::D2(_) => 2,
        }
    }

    pub fn as_d1(&self) -> Option<&[f64]> {
        match self {
            Positions::D1(v) => Some(v),
            Positions::D2(_) => None,
        }
    }

    pub fn as_d2(&self) -> Option<&[[f64; 2]]> {
        match self {
            Positions::D2(v) => Some(v),
            Positions::D1(_) => None,
        }
    }
}

/// A simulated trajectory: sample times, positions, and the latent state
/// sequence.
///
/// `states[t]` is the state driving the motion over `[times[t], times[t+1])`
/// for the discrete models, with the final entry replicating its
/// predecessor so the sequence is as long as the positions. For the
/// continuous-time model sampled on a grid, `states[k]` is the latent state
/// at the instant `times[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub positions: Positions,
    pub states: Vec<usize>,
    pub speed: f64,
    pub model: ModelKind,
}

/// Positions-only view of a trajectory: what an observer actually measures.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSeries {
    pub times: Vec<f64>,
    pub positions: Positions,
}

impl Trajectory {
    /// Drops the latent states, keeping the observable part.
    pub fn observations(&self) -> ObservationSeries {
        ObservationSeries {
            times: self.times.clone(),
            positions: self.positions.clone(),
        }
    }
}

fn draw_switch(rng: &mut ChaCha8Rng, params: &SwitchingProbs, from: usize) -> usize {
    let u: f64 = rng.random();
    let mut cum = 0.0;
    for j in 0..params.n_states() {
        if j == from {
            continue;
        }
        cum += params.prob(from, j);
        if u < cum {
            return j;
        }
    }
    from
}

/// Appends the replicated final entry so the state sequence matches the
/// position count.
fn close_states(mut during: Vec<usize>) -> Vec<usize> {
    let last = *during.last().expect("at least one step");
    during.push(last);
    during
}

/// Simulates the one-dimensional model: targets 0 and 1, exact update
/// `x <- x e^{-v}` in state 0 and `x <- 1 - (1-x) e^{-v}` in state 1, one
/// switching draw per unit boundary (after the position update). The
/// initial state is 0.
pub fn simulate_line(
    params: &SwitchingProbs,
    v: f64,
    x0: f64,
    n_steps: usize,
    seed: u64,
) -> Result<Trajectory> {
    if params.n_states() != 2 {
        return Err(Error::InvalidParameters(format!(
            "line model is two-state, got {}",
            params.n_states()
        )));
    }
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::Domain(format!("speed v = {v} must be positive")));
    }
    if !(x0 > 0.0 && x0 < 1.0) {
        return Err(Error::Domain(format!("x0 = {x0} outside (0,1)")));
    }
    if n_steps == 0 {
        return Err(Error::InvalidParameters("n_steps must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let contraction = (-v).exp();
    // 1 - e^{-v}; the additive form of the state-1 update cannot round onto
    // the boundary, so 0 < x < 1 is preserved in floating point.
    let pull = -(-v).exp_m1();
    let mut x = x0;
    let mut state = 0usize;
    let mut times = Vec::with_capacity(n_steps + 1);
    let mut xs = Vec::with_capacity(n_steps + 1);
    let mut during = Vec::with_capacity(n_steps);
    times.push(0.0);
    xs.push(x0);
    for t in 0..n_steps {
        x = if state == 0 {
            x * contraction
        } else {
            x + (1.0 - x) * pull
        };
        times.push((t + 1) as f64);
        xs.push(x);
        during.push(state);
        if t + 1 < n_steps {
            state = draw_switch(&mut rng, params, state);
        }
    }
    Ok(Trajectory {
        times,
        positions: Positions::D1(xs),
        states: close_states(during),
        speed: v,
        model: ModelKind::DiscreteMarkov,
    })
}

/// Simulates the polygon model: in state `i` the position contracts toward
/// vertex `g_i` componentwise, `p <- g_i + (p - g_i) e^{-v}` per unit step.
/// Switching is as in [`simulate_line`]; the initial state is 0.
pub fn simulate_polygon(
    params: &SwitchingProbs,
    targets: &PolygonTargets,
    v: f64,
    p0: [f64; 2],
    n_steps: usize,
    seed: u64,
) -> Result<Trajectory> {
    if params.n_states() != targets.len() {
        return Err(Error::InvalidParameters(format!(
            "{} states vs {} targets",
            params.n_states(),
            targets.len()
        )));
    }
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::Domain(format!("speed v = {v} must be positive")));
    }
    if !targets.contains_interior(p0) {
        return Err(Error::Domain(format!(
            "start ({}, {}) not strictly inside the target hull",
            p0[0], p0[1]
        )));
    }
    if n_steps == 0 {
        return Err(Error::InvalidParameters("n_steps must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // 1 - e^{-v}: pulling by the travelled fraction keeps every coordinate
    // strictly short of its target in floating point.
    let pull = -(-v).exp_m1();
    let mut p = p0;
    let mut state = 0usize;
    let mut times = Vec::with_capacity(n_steps + 1);
    let mut ps = Vec::with_capacity(n_steps + 1);
    let mut during = Vec::with_capacity(n_steps);
    times.push(0.0);
    ps.push(p0);
    for t in 0..n_steps {
        let g = targets.vertices()[state];
        p = [
            p[0] + (g[0] - p[0]) * pull,
            p[1] + (g[1] - p[1]) * pull,
        ];
        times.push((t + 1) as f64);
        ps.push(p);
        during.push(state);
        if t + 1 < n_steps {
            state = draw_switch(&mut rng, params, state);
        }
    }
    Ok(Trajectory {
        times,
        positions: Positions::D2(ps),
        states: close_states(during),
        speed: v,
        model: ModelKind::DiscreteMarkov,
    })
}

/// Transition record of the continuous-time model: `times[0] = 0` with the
/// initial state, then one entry per transition instant with the state
/// entered.
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonEventLog {
    pub times: Vec<f64>,
    pub states: Vec<usize>,
}

fn next_event(rng: &mut ChaCha8Rng, params: &MeanWaitTimes, from: usize) -> (f64, usize) {
    let mut best = (f64::INFINITY, from);
    for j in 0..params.n_states() {
        if j == from {
            continue;
        }
        let dt = Exp::new(1.0 / params.mu(from, j))
            .expect("positive rate")
            .sample(rng);
        if dt < best.0 {
            best = (dt, j);
        }
    }
    best
}

/// Runs the competing-clock model for `n_events` transitions, starting in
/// state 0 at time 0, and returns the full event log.
pub fn simulate_poisson_events(
    params: &MeanWaitTimes,
    n_events: usize,
    seed: u64,
) -> Result<PoissonEventLog> {
    if n_events == 0 {
        return Err(Error::InvalidParameters("n_events must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut times = Vec::with_capacity(n_events + 1);
    let mut states = Vec::with_capacity(n_events + 1);
    let mut t = 0.0;
    let mut state = 0usize;
    times.push(t);
    states.push(state);
    for _ in 0..n_events {
        let (dt, to) = next_event(&mut rng, params, state);
        t += dt;
        state = to;
        times.push(t);
        states.push(state);
    }
    Ok(PoissonEventLog { times, states })
}

/// Simulates the continuous-time model and samples it on the uniform grid
/// `0, sample_dt, 2 sample_dt, ... <= horizon`. Positions are integrated
/// exactly between events; `states[k]` is the latent state at the sample
/// instant.
pub fn simulate_poisson(
    params: &MeanWaitTimes,
    targets: &PolygonTargets,
    v: f64,
    p0: [f64; 2],
    horizon: f64,
    sample_dt: f64,
    seed: u64,
) -> Result<Trajectory> {
    if params.n_states() != targets.len() {
        return Err(Error::InvalidParameters(format!(
            "{} states vs {} targets",
            params.n_states(),
            targets.len()
        )));
    }
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::Domain(format!("speed v = {v} must be positive")));
    }
    if !(horizon > 0.0) || !(sample_dt > 0.0) {
        return Err(Error::Domain(
            "horizon and sample_dt must be positive".into(),
        ));
    }
    if !targets.contains_interior(p0) {
        return Err(Error::Domain(format!(
            "start ({}, {}) not strictly inside the target hull",
            p0[0], p0[1]
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_samples = (horizon / sample_dt).floor() as usize + 1;
    let mut times = Vec::with_capacity(n_samples);
    let mut ps = Vec::with_capacity(n_samples);
    let mut states = Vec::with_capacity(n_samples);

    let mut seg_start = 0.0;
    let mut seg_pos = p0;
    let mut state = 0usize;
    let (mut dt, mut to) = next_event(&mut rng, params, state);
    let mut next_switch = dt;
    let relax = |p: [f64; 2], g: [f64; 2], duration: f64| {
        let pull = -(-v * duration).exp_m1();
        [
            p[0] + (g[0] - p[0]) * pull,
            p[1] + (g[1] - p[1]) * pull,
        ]
    };
    for k in 0..n_samples {
        let t = k as f64 * sample_dt;
        while t >= next_switch {
            let g = targets.vertices()[state];
            seg_pos = relax(seg_pos, g, next_switch - seg_start);
            seg_start = next_switch;
            state = to;
            (dt, to) = next_event(&mut rng, params, state);
            next_switch += dt;
        }
        let g = targets.vertices()[state];
        times.push(t);
        ps.push(relax(seg_pos, g, t - seg_start));
        states.push(state);
    }
    Ok(Trajectory {
        times,
        positions: Positions::D2(ps),
        states,
        speed: v,
        model: ModelKind::Poisson,
    })
}

/// Adds i.i.d. Gaussian noise `N(0, sigma^2)` to every coordinate at every
/// sample time and drops the latent states.
pub fn add_noise(traj: &Trajectory, sigma: f64, seed: u64) -> Result<ObservationSeries> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::Domain(format!("sigma = {sigma} must be nonnegative")));
    }
    let mut obs = traj.observations();
    if sigma == 0.0 {
        return Ok(obs);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma).expect("finite sigma");
    match &mut obs.positions {
        Positions::D1(xs) => {
            for x in xs.iter_mut() {
                *x += normal.sample(&mut rng);
            }
        }
        Positions::D2(ps) => {
            for p in ps.iter_mut() {
                p[0] += normal.sample(&mut rng);
                p[1] += normal.sample(&mut rng);
            }
        }
    }
    Ok(obs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn no_switch_two_state() -> SwitchingProbs {
        SwitchingProbs::two_state(0.0, 0.0).unwrap()
    }

    /// Fixed-step RK4 on dx/dt = v (g - x); dense enough that the global
    /// error is far below 1e-12.
    fn rk4_relax(x0: f64, target: f64, v: f64, duration: f64, n_sub: usize) -> f64 {
        let h = duration / n_sub as f64;
        let f = |x: f64| v * (target - x);
        let mut x = x0;
        for _ in 0..n_sub {
            let k1 = f(x);
            let k2 = f(x + 0.5 * h * k1);
            let k3 = f(x + 0.5 * h * k2);
            let k4 = f(x + h * k3);
            x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        x
    }

    #[test]
    fn line_single_step_state0_exact() {
        let traj = simulate_line(&no_switch_two_state(), 0.1, 0.5, 1, 1).unwrap();
        let xs = traj.positions.as_d1().unwrap();
        assert_abs_diff_eq!(xs[1], 0.5 * (-0.1f64).exp(), epsilon = 1e-16);
        assert_abs_diff_eq!(xs[1], 0.452419, epsilon = 1e-6);
        assert_eq!(traj.states, vec![0, 0]);
    }

    #[test]
    fn line_step_matches_integrator_oracle() {
        for &(x0, v) in &[(0.37, 0.25), (0.9, 0.01), (0.05, 1.5)] {
            let traj = simulate_line(&no_switch_two_state(), v, x0, 1, 3).unwrap();
            let got = traj.positions.as_d1().unwrap()[1];
            let oracle = rk4_relax(x0, 0.0, v, 1.0, 1000);
            assert_abs_diff_eq!(got, oracle, epsilon = 1e-12);
        }
    }

    #[test]
    fn line_no_switching_decays_monotonically() {
        let traj = simulate_line(&no_switch_two_state(), 0.1, 0.5, 200, 9).unwrap();
        let xs = traj.positions.as_d1().unwrap();
        for w in xs.windows(2) {
            assert!(w[1] < w[0]);
            assert!(w[1] > 0.0);
        }
    }

    #[test]
    fn line_rejects_bad_start() {
        assert!(simulate_line(&no_switch_two_state(), 0.1, 0.0, 10, 0).is_err());
        assert!(simulate_line(&no_switch_two_state(), 0.1, 1.0, 10, 0).is_err());
        assert!(simulate_line(&no_switch_two_state(), 0.1, 1.5, 10, 0).is_err());
    }

    #[test]
    fn line_occupancy_approaches_stationary() {
        let params = SwitchingProbs::two_state(0.05, 0.08).unwrap();
        let traj = simulate_line(&params, 0.1, 0.5, 100_000, 11).unwrap();
        let n = traj.states.len() - 1;
        let in_state0 = traj.states[..n].iter().filter(|&&s| s == 0).count();
        let frac = in_state0 as f64 / n as f64;
        assert_abs_diff_eq!(frac, 0.08 / 0.13, epsilon = 0.02);
    }

    #[test]
    fn line_containment_across_parameters() {
        for (seed, (t01, t10)) in [(0.3, 0.4), (0.9, 0.9), (0.01, 0.02)].iter().enumerate() {
            let params = SwitchingProbs::two_state(*t01, *t10).unwrap();
            let traj = simulate_line(&params, 0.5, 0.5, 5000, seed as u64).unwrap();
            for &x in traj.positions.as_d1().unwrap() {
                assert!(x > 0.0 && x < 1.0);
            }
        }
    }

    #[test]
    fn line_is_deterministic() {
        let params = SwitchingProbs::two_state(0.05, 0.08).unwrap();
        let a = simulate_line(&params, 0.1, 0.5, 2000, 42).unwrap();
        let b = simulate_line(&params, 0.1, 0.5, 2000, 42).unwrap();
        assert_eq!(a, b);
        let c = simulate_line(&params, 0.1, 0.5, 2000, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn polygon_single_step_toward_origin() {
        let params = SwitchingProbs::new(3, []).unwrap();
        let traj = simulate_polygon(
            &params,
            &PolygonTargets::triangle(),
            0.01,
            [1.0 / 3.0, 1.0 / 3.0],
            1,
            5,
        )
        .unwrap();
        let p = traj.positions.as_d2().unwrap()[1];
        let expect = (1.0 / 3.0) * (-0.01f64).exp();
        assert_abs_diff_eq!(p[0], expect, epsilon = 1e-15);
        assert_abs_diff_eq!(p[1], expect, epsilon = 1e-15);
    }

    #[test]
    fn polygon_state1_decays_toward_right_vertex() {
        // Force a single 0 -> 1 switch after the first step, then hold.
        let params = SwitchingProbs::new(3, [((0, 1), 1.0)]).unwrap();
        let traj = simulate_polygon(
            &params,
            &PolygonTargets::triangle(),
            0.05,
            [1.0 / 3.0, 1.0 / 3.0],
            50,
            5,
        )
        .unwrap();
        assert_eq!(traj.states[0], 0);
        assert!(traj.states[1..].iter().all(|&s| s == 1));
        let ps = traj.positions.as_d2().unwrap();
        let decay = (-0.05f64).exp();
        for t in 1..ps.len() - 1 {
            assert_abs_diff_eq!(ps[t + 1][1], ps[t][1] * decay, epsilon = 1e-15);
            assert!(ps[t + 1][0] > ps[t][0]);
        }
    }

    #[test]
    fn polygon_step_matches_integrator_oracle() {
        let params = SwitchingProbs::new(3, []).unwrap();
        let traj = simulate_polygon(
            &params,
            &PolygonTargets::triangle(),
            0.2,
            [0.25, 0.4],
            1,
            5,
        )
        .unwrap();
        let p = traj.positions.as_d2().unwrap()[1];
        assert_abs_diff_eq!(p[0], rk4_relax(0.25, 0.0, 0.2, 1.0, 1000), epsilon = 1e-12);
        assert_abs_diff_eq!(p[1], rk4_relax(0.4, 0.0, 0.2, 1.0, 1000), epsilon = 1e-12);
    }

    #[test]
    fn polygon_rejects_exterior_start() {
        let params = SwitchingProbs::new(3, []).unwrap();
        let t = PolygonTargets::triangle();
        assert!(simulate_polygon(&params, &t, 0.01, [0.5, 0.5], 10, 0).is_err());
        assert!(simulate_polygon(&params, &t, 0.01, [0.0, 0.0], 10, 0).is_err());
        assert!(simulate_polygon(&params, &t, 0.01, [0.5, 0.0], 10, 0).is_err());
    }

    #[test]
    fn polygon_containment_on_square() {
        let square = PolygonTargets::new(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
            .unwrap();
        let params = SwitchingProbs::new(
            4,
            (0..4)
                .flat_map(|i| (0..4).filter(move |&j| j != i).map(move |j| ((i, j), 0.05)))
                .collect::<Vec<_>>(),
        )
        .unwrap();
        let traj = simulate_polygon(&params, &square, 0.3, [0.5, 0.5], 20_000, 77).unwrap();
        for &p in traj.positions.as_d2().unwrap() {
            assert!(square.contains_interior(p));
        }
    }

    #[test]
    fn polygon_targets_reject_degenerate_sets() {
        assert!(PolygonTargets::new(vec![[0.0, 0.0]]).is_err());
        assert!(PolygonTargets::new(vec![[0.0, 0.0], [0.0, 0.0]]).is_err());
        // Collinear point is not in strictly convex position.
        assert!(
            PolygonTargets::new(vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [0.0, 1.0]]).is_err()
        );
    }

    #[test]
    fn poisson_holding_times_and_branching() {
        let params = MeanWaitTimes::new(
            3,
            [
                ((0, 1), 20.0),
                ((0, 2), 20.0),
                ((1, 0), 10.0),
                ((1, 2), 30.0),
                ((2, 0), 15.0),
                ((2, 1), 25.0),
            ],
        )
        .unwrap();
        assert_abs_diff_eq!(params.mean_holding(1), 7.5, epsilon = 1e-15);

        let log = simulate_poisson_events(&params, 120_000, 3).unwrap();
        let mut hold_sum = 0.0;
        let mut hold_n = 0usize;
        let mut exits_to_0 = 0usize;
        let mut exits = 0usize;
        for k in 0..log.states.len() - 1 {
            if log.states[k] == 1 {
                hold_sum += log.times[k + 1] - log.times[k];
                hold_n += 1;
                exits += 1;
                if log.states[k + 1] == 0 {
                    exits_to_0 += 1;
                }
            }
        }
        let mean_hold = hold_sum / hold_n as f64;
        assert_abs_diff_eq!(mean_hold, 7.5, epsilon = 0.15);
        // p_10 = mu_1 / mu_10 = 7.5 / 10 = 0.75, within 3 binomial sigma.
        let p_hat = exits_to_0 as f64 / exits as f64;
        let se = (0.75 * 0.25 / exits as f64).sqrt();
        assert!((p_hat - 0.75).abs() < 3.0 * se, "p_hat = {p_hat}");
    }

    #[test]
    fn poisson_two_state_holding_is_exponential() {
        let params = MeanWaitTimes::two_state(5.0, 2.0).unwrap();
        let log = simulate_poisson_events(&params, 100_000, 17).unwrap();
        let mut sum = 0.0;
        let mut n = 0usize;
        for k in 0..log.states.len() - 1 {
            if log.states[k] == 0 {
                sum += log.times[k + 1] - log.times[k];
                n += 1;
            }
        }
        let mean = sum / n as f64;
        assert!((mean - 5.0).abs() / 5.0 < 0.02, "mean holding {mean}");
    }

    #[test]
    fn poisson_grid_sampling_decays_between_rare_events() {
        // Enormous waiting times: no event inside the horizon, so the grid
        // samples are the pure exponential relaxation toward vertex 0.
        let params = MeanWaitTimes::new(
            3,
            (0..3)
                .flat_map(|i| (0..3).filter(move |&j| j != i).map(move |j| ((i, j), 1e12)))
                .collect::<Vec<_>>(),
        )
        .unwrap();
        let traj = simulate_poisson(
            &params,
            &PolygonTargets::triangle(),
            0.1,
            [1.0 / 3.0, 1.0 / 3.0],
            10.0,
            1.0,
            4,
        )
        .unwrap();
        let ps = traj.positions.as_d2().unwrap();
        assert_eq!(ps.len(), 11);
        for (k, p) in ps.iter().enumerate() {
            let expect = (1.0 / 3.0) * (-0.1 * k as f64).exp();
            assert_abs_diff_eq!(p[0], expect, epsilon = 1e-12);
            assert_abs_diff_eq!(p[1], expect, epsilon = 1e-12);
        }
        assert!(traj.states.iter().all(|&s| s == 0));
    }

    #[test]
    fn noise_zero_sigma_is_identity() {
        let params = SwitchingProbs::two_state(0.05, 0.08).unwrap();
        let traj = simulate_line(&params, 0.1, 0.5, 100, 1).unwrap();
        let obs = add_noise(&traj, 0.0, 99).unwrap();
        assert_eq!(obs.positions, traj.positions);
    }

    #[test]
    fn noise_sample_std_matches_sigma() {
        let params = SwitchingProbs::two_state(0.05, 0.08).unwrap();
        let traj = simulate_line(&params, 0.1, 0.5, 10_000, 1).unwrap();
        let obs = add_noise(&traj, 0.01, 7).unwrap();
        let clean = traj.positions.as_d1().unwrap();
        let noisy = obs.positions.as_d1().unwrap();
        let diffs: Vec<f64> = clean.iter().zip(noisy).map(|(c, n)| n - c).collect();
        let mean = diffs.iter().sum::<f64>() / diffs.len() as f64;
        let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / diffs.len() as f64;
        let std = var.sqrt();
        assert!((std - 0.01).abs() / 0.01 < 0.05, "std = {std}");
    }

    #[test]
    fn noise_is_deterministic_per_seed() {
        let params = SwitchingProbs::two_state(0.05, 0.08).unwrap();
        let traj = simulate_line(&params, 0.1, 0.5, 500, 1).unwrap();
        let a = add_noise(&traj, 0.01, 123).unwrap();
        let b = add_noise(&traj, 0.01, 123).unwrap();
        assert_eq!(a, b);
    }
}
