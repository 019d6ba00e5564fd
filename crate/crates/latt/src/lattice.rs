//! The lattice data model: a free Z-module of rank n presented by a basis of
//! row vectors inside an ambient rational quadratic space.
//!
//! Two lattices interoperate (sum, intersection, containment) only when their
//! ambient forms are identical matrices. Generated lattices are normalized to
//! a canonical basis so equality is decidable.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::mat::{hnf_nonzero, int_kernel, IntMatrix, RatMatrix};
use crate::rat::{is_integer, Rational};

/// A vector in ambient coordinates.
pub type AmbientVector = Vec<Rational>;

#[derive(Clone, Debug)]
pub struct Lattice {
    ambient_form: RatMatrix,
    basis: RatMatrix,
    gram: RatMatrix,
    pub label: Option<String>,
}

impl Lattice {
    /// Build a lattice from an ambient bilinear form and a basis of row
    /// vectors. Rejects non-symmetric or non-positive-definite forms and
    /// rank-deficient bases.
    pub fn new(ambient_form: RatMatrix, basis: RatMatrix, label: Option<String>) -> Result<Self> {
        if ambient_form.rows() != ambient_form.cols() {
            return Err(Error::Dimension("ambient form must be square".into()));
        }
        if !ambient_form.is_symmetric() {
            return Err(Error::Input("ambient form must be symmetric".into()));
        }
        if !ambient_form.is_positive_definite() {
            return Err(Error::NotPositiveDefinite("ambient form".into()));
        }
        if basis.cols() != ambient_form.rows() {
            return Err(Error::Dimension(format!(
                "basis has {} columns but ambient dimension is {}",
                basis.cols(),
                ambient_form.rows()
            )));
        }
        if basis.rows() > basis.cols() {
            return Err(Error::RankDeficient(
                "more basis vectors than ambient dimension".into(),
            ));
        }
        if basis.rank() != basis.rows() {
            return Err(Error::RankDeficient(
                "basis rows are linearly dependent".into(),
            ));
        }
        let gram = basis.mul(&ambient_form).mul(&basis.transpose());
        Ok(Lattice {
            ambient_form,
            basis,
            gram,
            label,
        })
    }

    /// Lattice with the given Gram matrix: ambient form is the Gram itself
    /// and the basis is the identity.
    pub fn from_gram(gram: RatMatrix) -> Result<Self> {
        let n = gram.rows();
        Lattice::new(gram, RatMatrix::identity(n), None)
    }

    /// The standard cubic lattice Z^n.
    pub fn zn(n: usize) -> Self {
        Lattice::new(RatMatrix::identity(n), RatMatrix::identity(n), None)
            .expect("Z^n is always valid")
    }

    pub fn with_label(mut self, label: &str) -> Self {
        self.label = Some(label.to_string());
        self
    }

    pub fn rank(&self) -> usize {
        self.basis.rows()
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_form.rows()
    }

    pub fn ambient_form(&self) -> &RatMatrix {
        &self.ambient_form
    }

    pub fn basis(&self) -> &RatMatrix {
        &self.basis
    }

    pub fn gram(&self) -> &RatMatrix {
        &self.gram
    }

    pub fn determinant(&self) -> Rational {
        self.gram.det()
    }

    /// Inner product of two ambient vectors under the ambient form.
    pub fn inner(&self, u: &[Rational], v: &[Rational]) -> Rational {
        assert_eq!(u.len(), self.ambient_dim());
        assert_eq!(v.len(), self.ambient_dim());
        let mut acc = Rational::zero();
        for i in 0..u.len() {
            if u[i].is_zero() {
                continue;
            }
            for j in 0..v.len() {
                if !v[j].is_zero() {
                    acc += &u[i] * self.ambient_form.at(i, j) * &v[j];
                }
            }
        }
        acc
    }

    pub fn norm(&self, v: &[Rational]) -> Rational {
        self.inner(v, v)
    }

    /// Ambient vector of the integer combination `coords · basis`.
    pub fn vector_from_coords(&self, coords: &[Rational]) -> AmbientVector {
        assert_eq!(coords.len(), self.rank());
        let m = self.ambient_dim();
        let mut v = vec![Rational::zero(); m];
        for (i, c) in coords.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            for j in 0..m {
                let t = c * self.basis.at(i, j);
                v[j] += t;
            }
        }
        v
    }

    /// Rational coordinates of `v` in this basis, or `None` if `v` is
    /// outside the rational span.
    pub fn coords_of(&self, v: &[Rational]) -> Option<Vec<Rational>> {
        self.basis.solve_left(v)
    }

    /// True iff `v` is a lattice vector (integer coordinates in the basis).
    pub fn contains(&self, v: &[Rational]) -> bool {
        match self.coords_of(v) {
            Some(c) => c.iter().all(is_integer),
            None => false,
        }
    }

    /// True iff every basis vector of `other` lies in `self` (shared ambient
    /// form required).
    pub fn contains_lattice(&self, other: &Lattice) -> bool {
        self.ambient_form == other.ambient_form
            && other.basis.iter_rows().all(|r| self.contains(r))
    }

    pub fn is_integral(&self) -> bool {
        self.gram.is_integral()
    }

    pub fn is_even(&self) -> bool {
        if !self.gram.is_integral() {
            return false;
        }
        (0..self.rank()).all(|i| self.gram.at(i, i).to_integer().is_even())
    }

    pub fn is_unimodular(&self) -> bool {
        self.is_integral() && self.determinant().is_one()
    }

    /// The dual lattice, taken inside the rational span of `self`: basis
    /// `G⁻¹ · basis`. For full-rank integral lattices this contains `self`.
    pub fn dual(&self) -> Lattice {
        let ginv = self.gram.inverse().expect("gram of a lattice is invertible");
        let dual_basis = ginv.mul(&self.basis);
        Lattice {
            ambient_form: self.ambient_form.clone(),
            gram: ginv,
            basis: dual_basis,
            label: None,
        }
    }

    /// Rescale the ambient form by a positive rational `c` (norms scale by c).
    pub fn rescale(&self, c: &Rational) -> Result<Lattice> {
        if !c.is_positive() {
            return Err(Error::Input("rescale factor must be positive".into()));
        }
        Lattice::new(
            self.ambient_form.scale(c),
            self.basis.clone(),
            self.label.clone(),
        )
    }

    /// Orthogonal sum: block-diagonal ambient form and basis.
    pub fn orthogonal_sum(&self, other: &Lattice) -> Lattice {
        let form = self.ambient_form.block_diag(&other.ambient_form);
        let n = self.rank() + other.rank();
        let m = self.ambient_dim() + other.ambient_dim();
        let mut basis = RatMatrix::zero(n, m);
        for i in 0..self.rank() {
            for j in 0..self.ambient_dim() {
                *basis.at_mut(i, j) = self.basis.at(i, j).clone();
            }
        }
        for i in 0..other.rank() {
            for j in 0..other.ambient_dim() {
                *basis.at_mut(self.rank() + i, self.ambient_dim() + j) =
                    other.basis.at(i, j).clone();
            }
        }
        Lattice::new(form, basis, None).expect("orthogonal sum of valid lattices is valid")
    }

    /// Canonical basis of the lattice as a subset of the ambient space:
    /// clear denominators, integer row HNF, divide back. Basis-independent.
    pub fn canonical_basis(&self) -> RatMatrix {
        canonical_row_basis(&self.basis)
    }

    /// Same lattice with its basis replaced by the canonical one.
    pub fn canonicalized(&self) -> Lattice {
        Lattice::new(
            self.ambient_form.clone(),
            self.canonical_basis(),
            self.label.clone(),
        )
        .expect("canonical basis preserves validity")
    }

    /// Decidable equality as subsets of a shared ambient space.
    pub fn same_lattice(&self, other: &Lattice) -> bool {
        self.ambient_form == other.ambient_form
            && self.canonical_basis() == other.canonical_basis()
    }

    /// Index `[sup : self]` when `self` is a finite-index sublattice of
    /// `sup`; `None` otherwise.
    pub fn index_in(&self, sup: &Lattice) -> Option<BigInt> {
        if self.rank() != sup.rank() || !sup.contains_lattice(self) {
            return None;
        }
        let mut coord_rows = Vec::with_capacity(self.rank());
        for r in self.basis.iter_rows() {
            coord_rows.push(sup.coords_of(r)?);
        }
        let c = RatMatrix::from_rows(coord_rows);
        let d = c.det();
        debug_assert!(is_integer(&d));
        Some(d.to_integer().abs())
    }

    /// Gram matrix cleared to integers: `(d·gram, d)` with minimal `d`.
    pub fn scaled_integer_gram(&self) -> (IntMatrix, BigInt) {
        self.gram.clear_denominators()
    }
}

/// Canonical basis of the row space over Z of a rational matrix: with `d` the
/// common denominator, this is `hnf(d·rows)/d` with zero rows dropped.
pub fn canonical_row_basis(rows: &RatMatrix) -> RatMatrix {
    if rows.rows() == 0 {
        return rows.clone();
    }
    let (im, d) = rows.clear_denominators();
    let h = hnf_nonzero(&im);
    let dr = Rational::from_integer(d);
    let mut out = RatMatrix::zero(h.rows(), h.cols());
    for i in 0..h.rows() {
        for j in 0..h.cols() {
            *out.at_mut(i, j) = Rational::from_integer(h.at(i, j).clone()) / &dr;
        }
    }
    out
}

/// Lattice generated by all basis vectors of `a` and `b` together. Discrete
/// because all generators share a bounded denominator.
pub fn lattice_sum(a: &Lattice, b: &Lattice) -> Result<Lattice> {
    if a.ambient_form() != b.ambient_form() {
        return Err(Error::AmbientMismatch("operands have different ambient forms".into()));
    }
    let stacked = a.basis().stack(b.basis());
    Lattice::new(
        a.ambient_form().clone(),
        canonical_row_basis(&stacked),
        None,
    )
}

/// Lattice generated by `a` together with extra ambient vectors.
pub fn lattice_sum_vectors(a: &Lattice, extra: &[AmbientVector]) -> Result<Lattice> {
    if extra.is_empty() {
        return Ok(a.canonicalized());
    }
    for v in extra {
        if v.len() != a.ambient_dim() {
            return Err(Error::Dimension("glue vector has wrong length".into()));
        }
    }
    let stacked = a.basis().stack(&RatMatrix::from_rows(extra.to_vec()));
    Lattice::new(
        a.ambient_form().clone(),
        canonical_row_basis(&stacked),
        None,
    )
}

/// Intersection of two lattices in the same ambient space, via the integer
/// kernel of the stacked cleared bases.
pub fn lattice_intersection(a: &Lattice, b: &Lattice) -> Result<Lattice> {
    if a.ambient_form() != b.ambient_form() {
        return Err(Error::AmbientMismatch("operands have different ambient forms".into()));
    }
    // x·Ba = y·Bb  <=>  (x, y) in the left kernel of [Ba ; -Bb] (cleared).
    let stacked = a.basis().stack(&b.basis().scale(&-Rational::one()));
    let (im, _) = stacked.clear_denominators();
    let kernel = int_kernel(&im);
    let na = a.rank();
    let mut gens = Vec::new();
    for i in 0..kernel.rows() {
        let x: Vec<Rational> = kernel.row(i)[..na]
            .iter()
            .map(|z| Rational::from_integer(z.clone()))
            .collect();
        let mut v = vec![Rational::zero(); a.ambient_dim()];
        for (k, c) in x.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            for j in 0..a.ambient_dim() {
                let t = c * a.basis().at(k, j);
                v[j] += t;
            }
        }
        gens.push(v);
    }
    let gen_mat = if gens.is_empty() {
        RatMatrix::zero(0, a.ambient_dim())
    } else {
        canonical_row_basis(&RatMatrix::from_rows(gens))
    };
    Lattice::new(a.ambient_form().clone(), gen_mat, None)
}

/// The extremal minimum bound for even unimodular lattices of dimension n.
pub fn extremal_bound(n: usize) -> u64 {
    2 + 2 * (n as u64 / 24)
}

/// Least common denominator scaling for working with a lattice's vectors as
/// integer tuples: returns d with d·basis integral.
pub fn basis_denominator(l: &Lattice) -> BigInt {
    l.basis().denominator()
}
