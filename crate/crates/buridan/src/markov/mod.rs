//! Column-stochastic transition matrices and their stationary distributions.
//!
//! The switching process is a discrete-state Markov chain: at each unit time
//! step the system moves from state `i` to state `j` with probability
//! `tau_ij`, and stays put with the remaining probability. The chain's
//! transition operator is a column-stochastic matrix `A`; the long-run state
//! occupancy is the probability vector `v` with `A v = v`.
//!
//! Two independent routes to `v` are provided: a closed-form construction
//! from the principal minors of `A - I`, and a plain power iteration used as
//! a cross-check oracle.

mod symbolic;

pub use symbolic::count_stationary_monomials;

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Iteration cap for [`stationary_power_iteration`].
pub const POWER_ITERATION_CAP: usize = 1_000_000;

/// Per-ordered-pair switching probabilities `tau_ij` (`i != j`) of the
/// discrete-time model.
///
/// Pairs absent from the map have probability zero. For every source state
/// the total exit probability must not exceed one, so that the stay
/// probability `1 - sum_j tau_ij` is itself a valid probability.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchingProbs {
    n_states: usize,
    probs: BTreeMap<(usize, usize), f64>,
}

impl SwitchingProbs {
    pub fn new(
        n_states: usize,
        pairs: impl IntoIterator<Item = ((usize, usize), f64)>,
    ) -> Result<Self> {
        if n_states == 0 {
            return Err(Error::InvalidParameters("n_states must be positive".into()));
        }
        let mut probs = BTreeMap::new();
        for ((i, j), p) in pairs {
            if i == j {
                return Err(Error::InvalidParameters(format!(
                    "diagonal pair ({i},{j}) is not a switching probability"
                )));
            }
            if i >= n_states || j >= n_states {
                return Err(Error::InvalidParameters(format!(
                    "pair ({i},{j}) out of range for {n_states} states"
                )));
            }
            if !(0.0..=1.0).contains(&p) || !p.is_finite() {
                return Err(Error::InvalidParameters(format!(
                    "tau_{i}{j} = {p} outside [0,1]"
                )));
            }
            probs.insert((i, j), p);
        }
        let out = Self { n_states, probs };
        for i in 0..n_states {
            let total = out.exit_prob(i);
            if total > 1.0 {
                return Err(Error::InvalidParameters(format!(
                    "exit probabilities from state {i} sum to {total} > 1"
                )));
            }
        }
        Ok(out)
    }

    /// Two-state chain with switch probabilities `tau01` and `tau10`.
    pub fn two_state(tau01: f64, tau10: f64) -> Result<Self> {
        Self::new(2, [((0, 1), tau01), ((1, 0), tau10)])
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    /// Probability of switching from `i` to `j` in one step (zero if the
    /// pair was never set).
    pub fn prob(&self, i: usize, j: usize) -> f64 {
        self.probs.get(&(i, j)).copied().unwrap_or(0.0)
    }

    /// Total probability of leaving state `i` in one step.
    pub fn exit_prob(&self, i: usize) -> f64 {
        (0..self.n_states)
            .filter(|&j| j != i)
            .map(|j| self.prob(i, j))
            .sum()
    }

    /// All explicitly stored `(i, j) -> tau_ij` pairs, in key order.
    pub fn pairs(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        self.probs.iter().map(|(&k, &v)| (k, v))
    }
}

/// A validated column-stochastic matrix: nonnegative entries, every column
/// summing to one within `1e-12`.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticMatrix {
    m: DMatrix<f64>,
}

impl StochasticMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::InvalidParameters(format!(
                "matrix must be square and nonempty, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        for c in 0..m.ncols() {
            let mut sum = 0.0;
            for r in 0..m.nrows() {
                let x = m[(r, c)];
                if !(-1e-12..=1.0 + 1e-12).contains(&x) {
                    return Err(Error::InvalidParameters(format!(
                        "entry ({r},{c}) = {x} outside [0,1]"
                    )));
                }
                sum += x;
            }
            if (sum - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidParameters(format!(
                    "column {c} sums to {sum}, expected 1"
                )));
            }
        }
        Ok(Self { m })
    }

    pub fn n(&self) -> usize {
        self.m.nrows()
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.m[(row, col)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.m
    }
}

/// A nonnegative vector summing to one within `1e-12`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVector {
    v: DVector<f64>,
}

impl ProbabilityVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidParameters("empty probability vector".into()));
        }
        if entries.iter().any(|&x| x < -1e-12 || !x.is_finite()) {
            return Err(Error::InvalidParameters(
                "probability vector has a negative or non-finite entry".into(),
            ));
        }
        let sum: f64 = entries.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameters(format!(
                "probability vector sums to {sum}, expected 1"
            )));
        }
        Ok(Self {
            v: DVector::from_vec(entries),
        })
    }

    pub fn entries(&self) -> &[f64] {
        self.v.as_slice()
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }
}

/// Builds the column-stochastic transition matrix of the switching chain:
/// entry `(j, i)` is `tau_ij` for `j != i`, and the diagonal carries the
/// stay probability `1 - sum_{j != i} tau_ij`.
pub fn transition_matrix(params: &SwitchingProbs) -> Result<StochasticMatrix> {
    let n = params.n_states();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        let exit = params.exit_prob(i);
        if exit > 1.0 {
            return Err(Error::InvalidParameters(format!(
                "exit probabilities from state {i} sum to {exit} > 1"
            )));
        }
        m[(i, i)] = 1.0 - exit;
        for j in 0..n {
            if j != i {
                m[(j, i)] = params.prob(i, j);
            }
        }
    }
    StochasticMatrix::new(m)
}

/// Stationary distribution via principal minors of `M = A - I`.
///
/// The eigenvector of `A` for eigenvalue one has coordinates
/// `v_k = det(M_{k,k})`, where `M_{k,k}` drops row and column `k`. All
/// minors share the sign `(-1)^(n-1)`, so absolute values are taken before
/// normalizing to a probability vector. Minors of size one and two use the
/// direct formulas; larger ones go through LU with partial pivoting.
pub fn stationary_minor_determinant(matrix: &StochasticMatrix) -> Result<ProbabilityVector> {
    let n = matrix.n();
    if n < 2 {
        return Err(Error::UnsupportedSize(n));
    }
    let mut m = matrix.as_matrix().clone();
    for k in 0..n {
        m[(k, k)] -= 1.0;
    }
    let mut dets = Vec::with_capacity(n);
    for k in 0..n {
        let minor = m.clone().remove_row(k).remove_column(k);
        // nalgebra's determinant() uses the closed 1x1/2x2/3x3 formulas and
        // falls back to LU for larger sizes.
        dets.push(minor.determinant());
    }
    if dets.iter().all(|d| d.abs() < 1e-14) {
        return Err(Error::DegenerateChain);
    }
    let sum: f64 = dets.iter().map(|d| d.abs()).sum();
    let entries: Vec<f64> = dets.iter().map(|d| d.abs() / sum).collect();
    ProbabilityVector::new(entries)
}

/// Stationary distribution by iterating `p <- A p` from the uniform vector
/// until the sup-norm change drops below `tol`.
///
/// The chain must be irreducible and aperiodic for convergence to the unique
/// stationary vector; that is the caller's responsibility. Errors if the
/// iteration cap of [`POWER_ITERATION_CAP`] is reached.
pub fn stationary_power_iteration(
    matrix: &StochasticMatrix,
    tol: f64,
) -> Result<ProbabilityVector> {
    let n = matrix.n();
    let a = matrix.as_matrix();
    let mut p = DVector::from_element(n, 1.0 / n as f64);
    for _ in 0..POWER_ITERATION_CAP {
        let next = a * &p;
        let diff = (&next - &p).amax();
        p = next;
        if diff < tol {
            let sum = p.sum();
            return ProbabilityVector::new(p.iter().map(|x| x / sum).collect());
        }
    }
    Err(Error::NonConvergence(POWER_ITERATION_CAP))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn two_state_matrix(tau01: f64, tau10: f64) -> StochasticMatrix {
        transition_matrix(&SwitchingProbs::two_state(tau01, tau10).unwrap()).unwrap()
    }

    /// Random strictly positive column-stochastic matrix (irreducible and
    /// aperiodic by construction).
    fn random_stochastic(n: usize, rng: &mut ChaCha8Rng) -> StochasticMatrix {
        let mut m = DMatrix::zeros(n, n);
        for c in 0..n {
            let col: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..1.0)).collect();
            let s: f64 = col.iter().sum();
            for r in 0..n {
                m[(r, c)] = col[r] / s;
            }
            // Repair rounding so the validator's 1e-12 budget always holds.
            let colsum: f64 = (0..n).map(|r| m[(r, c)]).sum();
            m[(n - 1, c)] += 1.0 - colsum;
        }
        StochasticMatrix::new(m).unwrap()
    }

    #[test]
    fn transition_matrix_two_state() {
        let a = two_state_matrix(0.05, 0.08);
        assert_abs_diff_eq!(a.entry(0, 0), 0.95, epsilon = 1e-15);
        assert_abs_diff_eq!(a.entry(0, 1), 0.08, epsilon = 1e-15);
        assert_abs_diff_eq!(a.entry(1, 0), 0.05, epsilon = 1e-15);
        assert_abs_diff_eq!(a.entry(1, 1), 0.92, epsilon = 1e-15);
    }

    #[test]
    fn transition_matrix_no_switching_is_identity() {
        let params = SwitchingProbs::new(3, []).unwrap();
        let a = transition_matrix(&params).unwrap();
        for r in 0..3 {
            for c in 0..3 {
                let expect = if r == c { 1.0 } else { 0.0 };
                assert_eq!(a.entry(r, c), expect);
            }
        }
    }

    #[test]
    fn transition_matrix_rejects_budget_overflow() {
        let err = SwitchingProbs::new(3, [((0, 1), 0.7), ((0, 2), 0.7)]).unwrap_err();
        assert!(matches!(err, Error::InvalidParameters(_)));
    }

    #[test]
    fn switching_probs_rejects_out_of_range() {
        assert!(SwitchingProbs::two_state(-0.1, 0.5).is_err());
        assert!(SwitchingProbs::two_state(1.1, 0.5).is_err());
        assert!(SwitchingProbs::new(2, [((0, 0), 0.1)]).is_err());
        assert!(SwitchingProbs::new(2, [((0, 2), 0.1)]).is_err());
    }

    #[test]
    fn stationary_two_state_closed_form() {
        // For switch probabilities (tau01, tau10) the occupancy is
        // (tau10, tau01) / (tau01 + tau10).
        let a = two_state_matrix(0.05, 0.08);
        let v = stationary_minor_determinant(&a).unwrap();
        assert_abs_diff_eq!(v.entries()[0], 0.08 / 0.13, epsilon = 1e-14);
        assert_abs_diff_eq!(v.entries()[1], 0.05 / 0.13, epsilon = 1e-14);

        let p = stationary_power_iteration(&a, 1e-13).unwrap();
        assert_abs_diff_eq!(p.entries()[0], 0.08 / 0.13, epsilon = 1e-10);
        assert_abs_diff_eq!(p.entries()[1], 0.05 / 0.13, epsilon = 1e-10);
    }

    #[test]
    fn stationary_three_state_symmetric_is_uniform() {
        let t = 0.01;
        let params = SwitchingProbs::new(
            3,
            [
                ((0, 1), t),
                ((0, 2), t),
                ((1, 0), t),
                ((1, 2), t),
                ((2, 0), t),
                ((2, 1), t),
            ],
        )
        .unwrap();
        let v = stationary_minor_determinant(&transition_matrix(&params).unwrap()).unwrap();
        for &x in v.entries() {
            assert_abs_diff_eq!(x, 1.0 / 3.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn stationary_three_state_closed_form() {
        // tau = (tau01, tau02, tau10, tau12, tau20, tau21), the three-state
        // occupancies have the closed cofactor form below.
        let (t01, t02, t10, t12, t20, t21) = (0.001, 0.006, 0.002, 0.003, 0.004, 0.005);
        let params = SwitchingProbs::new(
            3,
            [
                ((0, 1), t01),
                ((0, 2), t02),
                ((1, 0), t10),
                ((1, 2), t12),
                ((2, 0), t20),
                ((2, 1), t21),
            ],
        )
        .unwrap();
        let a = transition_matrix(&params).unwrap();
        let num0 = t21 * t10 + t12 * t20 + t10 * t20;
        let num1 = t20 * t01 + t02 * t21 + t01 * t21;
        let num2 = t10 * t02 + t01 * t12 + t02 * t12;
        let total = num0 + num1 + num2;

        let v = stationary_minor_determinant(&a).unwrap();
        assert_abs_diff_eq!(v.entries()[0], num0 / total, epsilon = 1e-12);
        assert_abs_diff_eq!(v.entries()[1], num1 / total, epsilon = 1e-12);
        assert_abs_diff_eq!(v.entries()[2], num2 / total, epsilon = 1e-12);

        let p = stationary_power_iteration(&a, 1e-13).unwrap();
        for k in 0..3 {
            assert_abs_diff_eq!(p.entries()[k], v.entries()[k], epsilon = 1e-10);
        }
    }

    #[test]
    fn power_iteration_identity_fixed_point() {
        let a = StochasticMatrix::new(DMatrix::identity(4, 4)).unwrap();
        let p = stationary_power_iteration(&a, 1e-12).unwrap();
        for &x in p.entries() {
            assert_abs_diff_eq!(x, 0.25, epsilon = 1e-15);
        }
    }

    #[test]
    fn minor_determinant_matches_power_iteration_randomly() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 2..=8 {
            for _ in 0..20 {
                let a = random_stochastic(n, &mut rng);
                let v = stationary_minor_determinant(&a).unwrap();
                let p = stationary_power_iteration(&a, 1e-13).unwrap();
                for k in 0..n {
                    assert_abs_diff_eq!(v.entries()[k], p.entries()[k], epsilon = 1e-9);
                }
                // Direct eigen-residual check.
                let vd = DVector::from_column_slice(v.entries());
                let resid = (a.as_matrix() * &vd - &vd).amax();
                assert!(resid < 1e-10, "residual {resid} for n = {n}");
            }
        }
    }

    #[test]
    fn minor_determinant_rejects_reducible_chain() {
        // Two disconnected two-state blocks: no unique stationary vector.
        let mut m = DMatrix::zeros(4, 4);
        for (r, c, x) in [
            (0, 0, 0.9),
            (1, 0, 0.1),
            (0, 1, 0.2),
            (1, 1, 0.8),
            (2, 2, 0.7),
            (3, 2, 0.3),
            (2, 3, 0.4),
            (3, 3, 0.6),
        ] {
            m[(r, c)] = x;
        }
        let a = StochasticMatrix::new(m).unwrap();
        assert!(matches!(
            stationary_minor_determinant(&a),
            Err(Error::DegenerateChain)
        ));
    }
}
