//! Exact symbolic expansion of the stationary-vector minors.
//!
//! Each coordinate of the stationary eigenvector of the fully symbolic
//! switching matrix is `det(M_{k,k})`, a polynomial in the `tau_ij`. This
//! module expands those determinants with exact integer coefficients and
//! counts the surviving monomials; the count is `n^(n-2)` per coordinate and
//! every coefficient is `(-1)^(n-1)`. Floating point cannot certify the
//! cancellations involved, hence the sparse integer polynomials keyed by
//! monomial exponent vectors.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Sparse polynomial with integer coefficients. A monomial is the sorted
/// list of variable ids it multiplies (with multiplicity, though the minors
/// expanded here are multilinear).
#[derive(Debug, Clone, Default, PartialEq)]
struct Poly {
    terms: BTreeMap<Vec<u16>, i64>,
}

impl Poly {
    fn zero() -> Self {
        Self::default()
    }

    fn var(id: u16) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(vec![id], 1);
        Self { terms }
    }

    fn scaled_var(id: u16, coeff: i64) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(vec![id], coeff);
        Self { terms }
    }

    fn add_assign(&mut self, other: &Poly) {
        for (mono, &c) in &other.terms {
            let entry = self.terms.entry(mono.clone()).or_insert(0);
            *entry += c;
            if *entry == 0 {
                self.terms.remove(mono);
            }
        }
    }

    fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (ma, &ca) in &self.terms {
            for (mb, &cb) in &other.terms {
                let mut mono = Vec::with_capacity(ma.len() + mb.len());
                mono.extend_from_slice(ma);
                mono.extend_from_slice(mb);
                mono.sort_unstable();
                *out.terms.entry(mono).or_insert(0) += ca * cb;
            }
        }
        out.terms.retain(|_, c| *c != 0);
        out
    }

    fn negated(&self) -> Poly {
        Poly {
            terms: self.terms.iter().map(|(m, &c)| (m.clone(), -c)).collect(),
        }
    }

    fn n_terms(&self) -> usize {
        self.terms.len()
    }
}

/// Laplace expansion along the first row.
fn det(m: &[Vec<Poly>]) -> Poly {
    let n = m.len();
    if n == 1 {
        return m[0][0].clone();
    }
    let mut out = Poly::zero();
    for j in 0..n {
        if m[0][j].terms.is_empty() {
            continue;
        }
        let minor: Vec<Vec<Poly>> = m[1..]
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|&(c, _)| c != j)
                    .map(|(_, p)| p.clone())
                    .collect()
            })
            .collect();
        let mut term = m[0][j].mul(&det(&minor));
        if j % 2 == 1 {
            term = term.negated();
        }
        out.add_assign(&term);
    }
    out
}

/// Counts the distinct monomials in one coordinate of the symbolic
/// stationary eigenvector of the `n`-state switching matrix.
///
/// Expands `det(M_{k,k})` for every `k` with exact integer arithmetic,
/// verifies that all coordinates contain the same number of monomials, each
/// with coefficient `(-1)^(n-1)`, and returns that count. Supported for
/// `2 <= n <= 5`; the expansion cost grows superexponentially beyond that.
pub fn count_stationary_monomials(n: usize) -> Result<u64> {
    if !(2..=5).contains(&n) {
        return Err(Error::UnsupportedSize(n));
    }
    // Variable ids for the ordered pairs (i, j), i != j.
    let mut var_of = BTreeMap::new();
    let mut next = 0u16;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                var_of.insert((i, j), next);
                next += 1;
            }
        }
    }

    // M = A - I: entry (j, i) is tau_ij off the diagonal, and the diagonal
    // (i, i) is -sum_{j != i} tau_ij.
    let mut m = vec![vec![Poly::zero(); n]; n];
    for i in 0..n {
        let mut diag = Poly::zero();
        for j in 0..n {
            if j == i {
                continue;
            }
            m[j][i] = Poly::var(var_of[&(i, j)]);
            diag.add_assign(&Poly::scaled_var(var_of[&(i, j)], -1));
        }
        m[i][i] = diag;
    }

    let expected_sign: i64 = if n % 2 == 0 { -1 } else { 1 };
    let mut count = None;
    for k in 0..n {
        let minor: Vec<Vec<Poly>> = (0..n)
            .filter(|&r| r != k)
            .map(|r| {
                (0..n)
                    .filter(|&c| c != k)
                    .map(|c| m[r][c].clone())
                    .collect()
            })
            .collect();
        let p = det(&minor);
        for &c in p.terms.values() {
            if c != expected_sign {
                return Err(Error::InvalidParameters(format!(
                    "coordinate {k} has coefficient {c}, expected {expected_sign}"
                )));
            }
        }
        let this = p.n_terms() as u64;
        match count {
            None => count = Some(this),
            Some(prev) if prev != this => {
                return Err(Error::InvalidParameters(format!(
                    "coordinate {k} has {this} monomials, earlier coordinates had {prev}"
                )));
            }
            _ => {}
        }
    }
    Ok(count.expect("n >= 2"))
}
