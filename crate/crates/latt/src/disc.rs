//! Discriminant groups L#/L of integral lattices: structure from the Smith
//! normal form of the Gram matrix, class arithmetic, and the induced
//! bilinear and quadratic forms with values mod Z.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::lattice::{AmbientVector, Lattice};
use crate::mat::{smith_normal_form, IntMatrix};
use crate::rat::{is_integer, mod_one, Rational};

/// The finite abelian group L#/L of an integral lattice, with generators
/// realized as ambient vectors and the discriminant bilinear/quadratic forms
/// evaluated mod Z.
///
/// Class coordinates are a fixed-length vector, one entry per nontrivial
/// elementary divisor, each reduced into [0, order).
#[derive(Clone, Debug)]
pub struct DiscriminantGroup {
    parent: Lattice,
    dual: Lattice,
    /// Right SNF transform: quotient coordinates are x -> x * v.
    v: IntMatrix,
    /// All n elementary divisors of the Gram matrix (divisor chain).
    full_orders: Vec<BigInt>,
    /// Indices of the nontrivial divisors (> 1) within full_orders.
    nontrivial: Vec<usize>,
    /// Ambient representatives of the generating classes, one per
    /// nontrivial divisor.
    generators: Vec<AmbientVector>,
}

/// Compute L#/L. Requires an integral Gram matrix.
pub fn discriminant_group(l: &Lattice) -> Result<DiscriminantGroup> {
    if !l.is_integral() {
        return Err(Error::NotIntegral(
            "discriminant group needs an integral Gram matrix".into(),
        ));
    }
    let gram_int = l.gram().to_int()?;
    let snf = smith_normal_form(&gram_int);
    let n = l.rank();
    let mut full_orders = snf.divisors.clone();
    full_orders.resize(n, BigInt::zero());
    debug_assert!(
        full_orders.iter().all(|d| !d.is_zero()),
        "positive definite gram has full SNF rank"
    );
    let dual = l.dual();
    let vinv = snf.right.inverse_unimodular()?;
    let mut nontrivial = Vec::new();
    let mut generators = Vec::new();
    for i in 0..n {
        if full_orders[i].is_one() {
            continue;
        }
        nontrivial.push(i);
        // Generator: (row i of V^-1) in dual-basis coordinates.
        let coords: Vec<Rational> = (0..n)
            .map(|j| Rational::from_integer(vinv.at(i, j).clone()))
            .collect();
        generators.push(dual.vector_from_coords(&coords));
    }
    Ok(DiscriminantGroup {
        parent: l.clone(),
        dual,
        v: snf.right,
        full_orders,
        nontrivial,
        generators,
    })
}

impl DiscriminantGroup {
    pub fn parent(&self) -> &Lattice {
        &self.parent
    }

    pub fn dual(&self) -> &Lattice {
        &self.dual
    }

    /// Orders of the cyclic factors (elementary divisors > 1, ascending
    /// divisor chain). Empty for unimodular lattices.
    pub fn orders(&self) -> Vec<BigInt> {
        self.nontrivial
            .iter()
            .map(|&i| self.full_orders[i].clone())
            .collect()
    }

    pub fn generators(&self) -> &[AmbientVector] {
        &self.generators
    }

    /// Number of cyclic factors.
    pub fn num_factors(&self) -> usize {
        self.nontrivial.len()
    }

    /// Total group order; equals det(parent).
    pub fn order(&self) -> BigInt {
        self.full_orders.iter().product()
    }

    pub fn is_trivial(&self) -> bool {
        self.nontrivial.is_empty()
    }

    /// True iff the group is (Z/p)^s for the given prime, s = num_factors.
    pub fn is_elementary(&self, p: &BigInt) -> bool {
        self.nontrivial
            .iter()
            .all(|&i| &self.full_orders[i] == p)
    }

    /// Class coordinates of an ambient vector that lies in L#: one entry per
    /// nontrivial factor, reduced mod its order.
    pub fn class_coords(&self, v: &[Rational]) -> Result<Vec<BigInt>> {
        let x = self
            .dual
            .coords_of(v)
            .ok_or_else(|| Error::Input("vector outside the rational span".into()))?;
        if !x.iter().all(is_integer) {
            return Err(Error::Input("vector does not lie in the dual lattice".into()));
        }
        let xi: Vec<BigInt> = x.iter().map(|r| r.to_integer()).collect();
        let n = self.full_orders.len();
        let mut y = vec![BigInt::zero(); n];
        for j in 0..n {
            let mut acc = BigInt::zero();
            for k in 0..n {
                if !xi[k].is_zero() {
                    acc += &xi[k] * self.v.at(k, j);
                }
            }
            y[j] = acc;
        }
        Ok(self
            .nontrivial
            .iter()
            .map(|&i| y[i].mod_floor(&self.full_orders[i]))
            .collect())
    }

    /// Ambient representative of a class given by coordinates.
    pub fn representative(&self, coords: &[BigInt]) -> AmbientVector {
        assert_eq!(coords.len(), self.num_factors());
        let m = self.parent.ambient_dim();
        let mut out = vec![Rational::zero(); m];
        for (c, g) in coords.iter().zip(&self.generators) {
            if c.is_zero() {
                continue;
            }
            let cq = Rational::from_integer(c.clone());
            for j in 0..m {
                let t = &cq * &g[j];
                out[j] += t;
            }
        }
        out
    }

    /// Componentwise sum mod orders.
    pub fn add(&self, a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
        self.nontrivial
            .iter()
            .enumerate()
            .map(|(k, &i)| (&a[k] + &b[k]).mod_floor(&self.full_orders[i]))
            .collect()
    }

    /// Componentwise negation mod orders.
    pub fn neg(&self, a: &[BigInt]) -> Vec<BigInt> {
        self.nontrivial
            .iter()
            .enumerate()
            .map(|(k, &i)| (-&a[k]).mod_floor(&self.full_orders[i]))
            .collect()
    }

    /// Componentwise integer multiple mod orders.
    pub fn scale(&self, c: &BigInt, a: &[BigInt]) -> Vec<BigInt> {
        self.nontrivial
            .iter()
            .enumerate()
            .map(|(k, &i)| (c * &a[k]).mod_floor(&self.full_orders[i]))
            .collect()
    }

    pub fn is_zero_class(&self, a: &[BigInt]) -> bool {
        a.iter().all(|c| c.is_zero())
    }

    /// All classes, zero class first, in lexicographic coordinate order.
    /// The group order is the caller's responsibility.
    pub fn all_classes(&self) -> Vec<Vec<BigInt>> {
        let orders = self.orders();
        let mut out = vec![vec![BigInt::zero(); orders.len()]];
        loop {
            let last = out.last().unwrap();
            let mut next = last.clone();
            let mut i = orders.len();
            loop {
                if i == 0 {
                    return out;
                }
                i -= 1;
                next[i] += 1;
                if next[i] < orders[i] {
                    break;
                }
                next[i] = BigInt::zero();
            }
            out.push(next);
        }
    }

    /// The discriminant bilinear form (a, b) mod Z, in [0, 1).
    pub fn bilinear(&self, a: &[BigInt], b: &[BigInt]) -> Rational {
        let ra = self.representative(a);
        let rb = self.representative(b);
        mod_one(&self.parent.inner(&ra, &rb))
    }

    /// The discriminant quadratic form Q(a) = (a,a)/2 mod Z, in [0, 1).
    /// Well defined only when the parent is even.
    pub fn quadratic(&self, a: &[BigInt]) -> Result<Rational> {
        if !self.parent.is_even() {
            return Err(Error::Input(
                "discriminant quadratic form needs an even parent".into(),
            ));
        }
        let r = self.representative(a);
        let half = Rational::new(BigInt::one(), BigInt::from(2));
        Ok(mod_one(&(self.parent.norm(&r) * half)))
    }
}
