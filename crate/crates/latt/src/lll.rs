//! Exact LLL reduction on the Gram matrix, with the unimodular transform
//! tracked so the reduced basis stays inside the original ambient space.
//!
//! All Gram-Schmidt data is kept as exact rationals; the Lovasz condition is
//! tested without rounding, so the output is deterministically reduced for
//! the given delta.

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::mat::IntMatrix;
use crate::rat::{rat, round_half_up, Rational};

/// The conventional reduction quality parameter 3/4.
pub fn default_delta() -> Rational {
    rat(3, 4)
}

struct GsoState {
    n: usize,
    g: Vec<Vec<Rational>>,
    mu: Vec<Vec<Rational>>,
    b: Vec<Rational>,
    u: IntMatrix,
}

impl GsoState {
    fn init(gram: &[Vec<Rational>]) -> Result<Self> {
        let n = gram.len();
        let mut mu = vec![vec![Rational::zero(); n]; n];
        let mut b = vec![Rational::zero(); n];
        for i in 0..n {
            for j in 0..i {
                // (b_i, b_j*) = g[i][j] - sum_{t<j} mu[j][t] mu[i][t] b[t]
                let mut c = gram[i][j].clone();
                for t in 0..j {
                    c -= &mu[j][t] * &mu[i][t] * &b[t];
                }
                mu[i][j] = c / &b[j];
            }
            let mut bi = gram[i][i].clone();
            for t in 0..i {
                bi -= &mu[i][t] * &mu[i][t] * &b[t];
            }
            if !bi.is_positive() {
                return Err(Error::RankDeficient(
                    "Gram matrix is not positive definite".into(),
                ));
            }
            b[i] = bi;
        }
        Ok(GsoState {
            n,
            g: gram.to_vec(),
            mu,
            b,
            u: IntMatrix::identity(n),
        })
    }

    /// Size-reduce row k against row l < k: b_k -= round(mu[k][l]) b_l.
    fn reduce(&mut self, k: usize, l: usize) {
        let r = round_half_up(&self.mu[k][l]);
        if r.is_zero() {
            return;
        }
        let rq = Rational::from_integer(r.clone());
        for j in 0..self.n {
            let t = &rq * &self.g[l][j];
            self.g[k][j] -= t;
        }
        for j in 0..self.n {
            let t = &rq * &self.g[j][l];
            self.g[j][k] -= t;
        }
        let neg = -r;
        self.u.add_row_multiple(k, l, &neg);
        self.mu[k][l] -= &rq;
        for j in 0..l {
            let t = &rq * &self.mu[l][j];
            self.mu[k][j] -= t;
        }
    }

    /// Exchange rows k-1 and k, updating the GSO data in place.
    fn swap(&mut self, k: usize) {
        self.u.swap_rows(k, k - 1);
        self.g.swap(k, k - 1);
        for row in self.g.iter_mut() {
            row.swap(k, k - 1);
        }
        for j in 0..k - 1 {
            let tmp = self.mu[k][j].clone();
            self.mu[k][j] = self.mu[k - 1][j].clone();
            self.mu[k - 1][j] = tmp;
        }
        let m = self.mu[k][k - 1].clone();
        let bnew = &self.b[k] + &m * &m * &self.b[k - 1];
        self.mu[k][k - 1] = &m * &self.b[k - 1] / &bnew;
        self.b[k] = &self.b[k - 1] * &self.b[k] / &bnew;
        self.b[k - 1] = bnew;
        for i in k + 1..self.n {
            let t = self.mu[i][k].clone();
            self.mu[i][k] = &self.mu[i][k - 1] - &m * &t;
            self.mu[i][k - 1] = &t + &self.mu[k][k - 1] * &self.mu[i][k];
        }
    }
}

/// Delta-LLL-reduce the basis of `l`. Returns the reduced lattice (equal to
/// `l` as a point set) and the unimodular transform `u` with
/// `reduced.basis = u * l.basis`.
pub fn lll_reduce(l: &Lattice, delta: &Rational) -> Result<(Lattice, IntMatrix)> {
    let quarter = rat(1, 4);
    if *delta <= quarter || *delta >= Rational::one() {
        return Err(Error::Input(format!(
            "delta must satisfy 1/4 < delta < 1, got {}",
            delta
        )));
    }
    let n = l.rank();
    if n <= 1 {
        return Ok((l.clone(), IntMatrix::identity(n)));
    }
    // Scale the gram to integers first: mu and the Lovasz test are scale
    // invariant, and integer entries keep the GSO denominators small.
    let scale = Rational::from_integer(l.gram().denominator());
    let gram_rows: Vec<Vec<Rational>> = (0..n)
        .map(|i| l.gram().row_vec(i).iter().map(|x| x * &scale).collect())
        .collect();
    let mut st = GsoState::init(&gram_rows)?;

    let mut k = 1;
    while k < st.n {
        st.reduce(k, k - 1);
        let lhs = st.b[k].clone();
        let mkk = st.mu[k][k - 1].clone();
        let rhs = (delta - &mkk * &mkk) * &st.b[k - 1];
        if lhs < rhs {
            st.swap(k);
            k = k.max(2) - 1;
        } else {
            for j in (0..k.saturating_sub(1)).rev() {
                st.reduce(k, j);
            }
            k += 1;
        }
    }

    let new_basis = st.u.to_rat().mul(l.basis());
    let reduced = Lattice::new(l.ambient_form().clone(), new_basis, l.label.clone())?;
    debug_assert_eq!(
        reduced
            .gram()
            .row_vec(0)
            .iter()
            .map(|x| x * &scale)
            .collect::<Vec<_>>(),
        st.g[0]
    );
    Ok((reduced, st.u))
}
