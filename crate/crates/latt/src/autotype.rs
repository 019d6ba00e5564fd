//! Prime-order automorphism analysis: the fixed and image sublattices of an
//! isometry of prime order, the attached type triple, structural checks on
//! the decomposition of an even unimodular parent, and trace lattices of
//! Hermitian forms over p-th cyclotomic integers.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::disc::discriminant_group;
use crate::error::{Error, Result};
use crate::glue::is_prime_u64;
use crate::isom::Isometry;
use crate::lattice::Lattice;
use crate::mat::{int_kernel, IntMatrix, RatMatrix};
use crate::rat::Rational;

/// The type triple of a prime-order isometry: d is the rank of the fixed
/// sublattice, z(p−1) the rank of the image sublattice, p^s the index of
/// their orthogonal sum in the parent.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AutType {
    pub p: u64,
    pub z: usize,
    pub d: usize,
    pub s: usize,
}

impl fmt::Display for AutType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-({},{})-{}", self.p, self.z, self.d, self.s)
    }
}

/// A parent lattice split along a prime-order isometry: the fixed part is
/// the kernel of sigma − 1, the image part the kernel of the norm element
/// 1 + sigma + ... + sigma^{p−1}, both primitive in the parent.
#[derive(Clone, Debug)]
pub struct TypeDecomposition {
    lattice: Lattice,
    sigma: Isometry,
    fixed: Lattice,
    image: Lattice,
    ty: AutType,
}

impl TypeDecomposition {
    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn sigma(&self) -> &Isometry {
        &self.sigma
    }

    pub fn fixed(&self) -> &Lattice {
        &self.fixed
    }

    pub fn image(&self) -> &Lattice {
        &self.image
    }

    pub fn ty(&self) -> AutType {
        self.ty
    }
}

/// Multiplicative order of an integer matrix, capped to catch non-torsion
/// input before entries blow up.
fn matrix_order(m: &IntMatrix, cap: u64) -> Result<u64> {
    let id = IntMatrix::identity(m.rows());
    if m.rows() == 0 {
        return Ok(1);
    }
    let mut acc = m.clone();
    let mut k = 1u64;
    while acc != id {
        acc = acc.mul(m);
        k += 1;
        if k > cap {
            return Err(Error::Input(format!("matrix order exceeds cap {cap}")));
        }
    }
    Ok(k)
}

/// Sublattice of `l` spanned by the given coordinate rows.
fn sublattice_from_coords(l: &Lattice, coords: &IntMatrix) -> Result<Lattice> {
    let ambient_rows = coords.to_rat().mul(l.basis());
    Lattice::new(l.ambient_form().clone(), ambient_rows, None)
}

/// Splits `l` along a prime-order isometry and verifies the type laws:
/// rank arithmetic n = d + z(p−1), the index [L : fixed ⊕ image] a pure
/// power p^s with s ≤ min(z, d), and sigma-invariance of both parts.
pub fn decompose(l: &Lattice, sigma: &Isometry) -> Result<TypeDecomposition> {
    let sigma = Isometry::automorphism(l, sigma.matrix().clone())?;
    let n = l.rank();
    let p = matrix_order(sigma.matrix(), 10_000)?;
    if !is_prime_u64(p) {
        return Err(Error::Input(format!("sigma has order {p}, which is not prime")));
    }
    let m = sigma.matrix();
    let m_minus_one = m.sub(&IntMatrix::identity(n));
    let fixed_coords = int_kernel(&m_minus_one);
    let mut norm_element = IntMatrix::zero(n, n);
    let mut power = IntMatrix::identity(n);
    for _ in 0..p {
        norm_element = norm_element.add(&power);
        power = power.mul(m);
    }
    let image_coords = int_kernel(&norm_element);
    let fixed = sublattice_from_coords(l, &fixed_coords)?;
    let image = sublattice_from_coords(l, &image_coords)?;
    let d = fixed.rank();
    let zrank = image.rank();
    let pm1 = (p - 1) as usize;
    if zrank % pm1 != 0 || d + zrank != n {
        return Err(Error::Verification(format!(
            "rank split {d} + {zrank} violates n = d + z(p-1) for n = {n}, p = {p}"
        )));
    }
    let z = zrank / pm1;
    let sum = Lattice::new(
        l.ambient_form().clone(),
        fixed.basis().stack(image.basis()),
        None,
    )?;
    let mut index = sum
        .index_in(l)
        .ok_or_else(|| Error::Verification("fixed ⊕ image is not a sublattice".into()))?;
    let mut s = 0usize;
    let pb = BigInt::from(p);
    while index > BigInt::one() {
        let (q, r) = index.div_rem(&pb);
        if !r.is_zero() {
            return Err(Error::Verification(
                "index [L : fixed ⊕ image] is not a power of p".into(),
            ));
        }
        index = q;
        s += 1;
    }
    if s > z.min(d) {
        return Err(Error::Verification(format!(
            "glue exponent {s} exceeds min(z, d) = {}",
            z.min(d)
        )));
    }
    // Sigma stabilizes both parts: membership of every basis image.
    for part in [&fixed, &image] {
        for i in 0..part.rank() {
            let coords = l
                .coords_of(part.basis().row(i))
                .expect("sublattice rows lie in the parent span");
            let image_vec = l.vector_from_coords(&sigma.apply_coords(&coords));
            if !part.contains(&image_vec) {
                return Err(Error::Verification(
                    "sigma does not stabilize the decomposition".into(),
                ));
            }
        }
    }
    Ok(TypeDecomposition {
        lattice: l.clone(),
        sigma,
        fixed,
        image,
        ty: AutType { p, z, d, s },
    })
}

/// Structural checks on the decomposition of an even unimodular parent:
/// both discriminant groups p-elementary of rank s, and, when s = z, the
/// dual of the image rescaled by p even with determinant p^{z(p−1)}/det(image).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct UnimodularRemark {
    pub fixed_group_ok: bool,
    pub image_group_ok: bool,
    /// None when s < z and the clause does not apply.
    pub rescaled_dual_ok: Option<bool>,
}

impl UnimodularRemark {
    pub fn all_pass(&self) -> bool {
        self.fixed_group_ok && self.image_group_ok && self.rescaled_dual_ok.unwrap_or(true)
    }
}

pub fn verify_unimodular_remark(dec: &TypeDecomposition) -> Result<UnimodularRemark> {
    let l = dec.lattice();
    if !l.is_even() || !l.is_unimodular() {
        return Err(Error::Input(
            "decomposition checks need an even unimodular parent".into(),
        ));
    }
    let ty = dec.ty();
    let pb = BigInt::from(ty.p);
    let elementary_of_rank_s = |sub: &Lattice| -> Result<bool> {
        if sub.rank() == 0 {
            return Ok(ty.s == 0);
        }
        let disc = discriminant_group(sub)?;
        Ok(disc.is_elementary(&pb) && disc.num_factors() == ty.s)
    };
    let fixed_group_ok = elementary_of_rank_s(dec.fixed())?;
    let image_group_ok = elementary_of_rank_s(dec.image())?;
    let rescaled_dual_ok = if ty.s == ty.z {
        let pr = Rational::from(pb.clone());
        let rescaled = dec.image().dual().rescale(&pr)?;
        let expected = Rational::from(pb.pow(ty.z as u32 * (ty.p as u32 - 1)))
            / dec.image().determinant();
        Some(rescaled.is_even() && rescaled.determinant() == expected)
    } else {
        None
    };
    Ok(UnimodularRemark {
        fixed_group_ok,
        image_group_ok,
        rescaled_dual_ok,
    })
}

/// For odd p and even parent, both parts of the decomposition are even.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EvennessRemark {
    pub fixed_even: bool,
    pub image_even: bool,
}

pub fn verify_evenness_remark(dec: &TypeDecomposition) -> Result<EvennessRemark> {
    if dec.ty().p == 2 {
        return Err(Error::Input("evenness check needs odd p".into()));
    }
    if !dec.lattice().is_even() {
        return Err(Error::Input("evenness check needs an even parent".into()));
    }
    Ok(EvennessRemark {
        fixed_even: dec.fixed().is_even(),
        image_even: dec.image().is_even(),
    })
}

// Cyclotomic integer arithmetic: coefficient vectors of length p−1 on the
// basis 1, ζ, ..., ζ^{p−2}, reduced mod the p-th cyclotomic polynomial.

/// Reduce an arbitrary-length coefficient vector: exponents fold mod p,
/// then ζ^{p−1} = −(1 + ζ + ... + ζ^{p−2}).
pub(crate) fn cyc_reduce(p: u64, poly: &[BigInt]) -> Vec<BigInt> {
    let pu = p as usize;
    let mut folded = vec![BigInt::zero(); pu];
    for (k, c) in poly.iter().enumerate() {
        folded[k % pu] += c;
    }
    let top = folded[pu - 1].clone();
    (0..pu - 1).map(|k| &folded[k] - &top).collect()
}

/// Complex conjugation ζ ↦ ζ^{−1}.
pub(crate) fn cyc_conj(p: u64, e: &[BigInt]) -> Vec<BigInt> {
    let pu = p as usize;
    let mut folded = vec![BigInt::zero(); pu];
    for (k, c) in e.iter().enumerate() {
        folded[(pu - k) % pu] += c;
    }
    cyc_reduce(p, &folded)
}

pub(crate) fn cyc_mul(p: u64, a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    let mut prod = vec![BigInt::zero(); a.len() + b.len()];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            prod[i + j] += x * y;
        }
    }
    cyc_reduce(p, &prod)
}

/// Tr(ζ^k) = p−1 for k ≡ 0 and −1 otherwise, extended linearly.
pub(crate) fn cyc_trace(p: u64, e: &[BigInt]) -> BigInt {
    let mut t = BigInt::from(p - 1) * &e[0];
    for c in &e[1..] {
        t -= c;
    }
    t
}

/// A Hermitian matrix over the p-th cyclotomic integers: entry(j, i) is the
/// complex conjugate of entry(i, j).
#[derive(Clone, Debug)]
pub struct CyclotomicMatrix {
    p: u64,
    size: usize,
    entries: Vec<Vec<BigInt>>,
}

impl CyclotomicMatrix {
    pub fn new(p: u64, size: usize, entries: Vec<Vec<BigInt>>) -> Result<CyclotomicMatrix> {
        if !is_prime_u64(p) {
            return Err(Error::Input(format!("{p} is not prime")));
        }
        if entries.len() != size * size {
            return Err(Error::Input("entry count must be size²".into()));
        }
        let deg = (p - 1) as usize;
        for e in &entries {
            if e.len() != deg {
                return Err(Error::Input(format!(
                    "each entry needs {deg} coefficients on 1, ζ, ..., ζ^{}",
                    p - 2
                )));
            }
        }
        let m = CyclotomicMatrix { p, size, entries };
        for i in 0..size {
            for j in 0..size {
                if m.entry(j, i) != &cyc_conj(p, m.entry(i, j))[..] {
                    return Err(Error::Input("matrix is not Hermitian".into()));
                }
            }
        }
        Ok(m)
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn entry(&self, i: usize, j: usize) -> &[BigInt] {
        &self.entries[i * self.size + j]
    }
}

/// The trace lattice of a Hermitian cyclotomic form: gram of the integral
/// basis ζ^k e_i (i major, k = 0..p−2 minor) with entries
/// scale · Tr(ζ^{k−l} h_ij). Requires h positive definite.
pub fn hermitian_trace_lattice(h: &CyclotomicMatrix, scale: &Rational) -> Result<Lattice> {
    let p = h.p();
    let deg = (p - 1) as usize;
    let n = h.size() * deg;
    let mut gram = RatMatrix::zero(n, n);
    for i in 0..h.size() {
        for j in 0..h.size() {
            for k in 0..deg {
                for l in 0..deg {
                    let e = ((k + p as usize) - l) % p as usize;
                    let mut monomial = vec![BigInt::zero(); e + 1];
                    monomial[e] = BigInt::one();
                    let elt = cyc_mul(p, &cyc_reduce(p, &monomial), h.entry(i, j));
                    let val = Rational::from(cyc_trace(p, &elt)) * scale;
                    *gram.at_mut(i * deg + k, j * deg + l) = val;
                }
            }
        }
    }
    if !gram.is_symmetric() {
        return Err(Error::Verification("trace gram is not symmetric".into()));
    }
    Lattice::from_gram(gram)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::glue::{GlueCode, GlueVector};
    use crate::isom::is_isometric;
    use crate::lattice::AmbientVector;
    use crate::rat::{rat, rat_i};
    use crate::stdlat::an;
    use num_traits::ToPrimitive;

    fn opts() -> crate::enumerate::EnumOptions {
        crate::enumerate::EnumOptions::default()
    }

    /// Isometry of `l` induced by a linear map of the ambient space.
    fn ambient_map_isometry(l: &Lattice, t: &RatMatrix) -> Isometry {
        let n = l.rank();
        let mut flat = Vec::with_capacity(n * n);
        for i in 0..n {
            let vi = RatMatrix::from_rows(vec![l.basis().row(i).to_vec()]);
            let image = vi.mul(t);
            let coords = l.coords_of(image.row(0)).expect("map preserves the span");
            flat.extend(coords.iter().map(|c| c.to_integer().to_i64().unwrap()));
        }
        Isometry::automorphism(l, IntMatrix::from_i64(n, n, &flat)).unwrap()
    }

    /// Coxeter element of A4 on the simple-root basis, order 5.
    fn coxeter4() -> RatMatrix {
        RatMatrix::from_i64(4, 4, &[0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, -1, -1, -1, -1])
    }

    #[test]
    fn swap_on_z2_has_type_2_1_1_1() {
        let l = Lattice::zn(2);
        let swap = Isometry::automorphism(&l, IntMatrix::from_i64(2, 2, &[0, 1, 1, 0])).unwrap();
        let dec = decompose(&l, &swap).unwrap();
        assert_eq!(dec.ty(), AutType { p: 2, z: 1, d: 1, s: 1 });
        assert_eq!(dec.ty().to_string(), "2-(1,1)-1");
        assert_eq!(dec.fixed().rank(), 1);
        assert_eq!(dec.fixed().gram().at(0, 0), &rat_i(2));
        assert_eq!(dec.image().rank(), 1);
        assert_eq!(dec.image().gram().at(0, 0), &rat_i(2));
        // Z² is not even: the unimodular remark rejects it.
        assert!(verify_unimodular_remark(&dec).is_err());
        // p = 2 rejects the evenness remark.
        assert!(verify_evenness_remark(&dec).is_err());
    }

    #[test]
    fn coxeter_on_a4_has_type_5_1_0_0() {
        let l = an(4);
        let sigma = ambient_map_isometry(&l, &coxeter4());
        let dec = decompose(&l, &sigma).unwrap();
        assert_eq!(dec.ty(), AutType { p: 5, z: 1, d: 0, s: 0 });
        assert_eq!(dec.fixed().rank(), 0);
        assert!(dec.image().same_lattice(&l));
        let rep = verify_evenness_remark(&dec).unwrap();
        assert!(rep.fixed_even && rep.image_even);
    }

    #[test]
    fn rotation_on_a2_has_type_3_1_0_0() {
        let l = an(2);
        let sigma = ambient_map_isometry(&l, &RatMatrix::from_i64(2, 2, &[0, 1, -1, -1]));
        let dec = decompose(&l, &sigma).unwrap();
        assert_eq!(dec.ty(), AutType { p: 3, z: 1, d: 0, s: 0 });
        let rep = verify_evenness_remark(&dec).unwrap();
        assert!(rep.image_even);
    }

    /// E8 as the glued overlattice of A4 ⊥ A4, in a 10-dim ambient space.
    fn glued_e8() -> Lattice {
        let a = an(4);
        let d = crate::disc::discriminant_group(&a).unwrap();
        let b = d
            .all_classes()
            .into_iter()
            .find(|c| d.quadratic(c).unwrap() == rat(2, 5))
            .map(|c| d.representative(&c))
            .unwrap();
        let c = d
            .all_classes()
            .into_iter()
            .find(|c| d.quadratic(c).unwrap() == rat(3, 5))
            .map(|c| d.representative(&c))
            .unwrap();
        let code = GlueCode::new(
            a.clone(),
            a,
            5,
            vec![GlueVector { left: b, right: c }],
        )
        .unwrap();
        code.overlattice()
    }

    #[test]
    fn order_five_block_rotation_on_glued_e8() {
        let l = glued_e8();
        assert!(l.is_unimodular() && l.is_even());
        // Both A4 blocks rotated: fixed part zero, type 5-(2,0)-0.
        let sigma = ambient_map_isometry(&l, &coxeter4().block_diag(&coxeter4()));
        let dec = decompose(&l, &sigma).unwrap();
        assert_eq!(dec.ty(), AutType { p: 5, z: 2, d: 0, s: 0 });
        let rep = verify_unimodular_remark(&dec).unwrap();
        assert!(rep.fixed_group_ok && rep.image_group_ok);
        assert_eq!(rep.rescaled_dual_ok, None);
        assert!(rep.all_pass());
        let erep = verify_evenness_remark(&dec).unwrap();
        assert!(erep.fixed_even && erep.image_even);
    }

    #[test]
    fn order_five_single_block_rotation_on_glued_e8() {
        let l = glued_e8();
        // One A4 block rotated: fixed = the other A4, s = z = 1, so the
        // rescaled-dual clause applies.
        let sigma = ambient_map_isometry(&l, &coxeter4().block_diag(&RatMatrix::identity(4)));
        let dec = decompose(&l, &sigma).unwrap();
        assert_eq!(dec.ty(), AutType { p: 5, z: 1, d: 4, s: 1 });
        assert_eq!(dec.fixed().determinant(), rat_i(5));
        assert_eq!(dec.image().determinant(), rat_i(5));
        assert!(is_isometric(dec.fixed(), &an(4), &opts()).unwrap().is_some());
        let rep = verify_unimodular_remark(&dec).unwrap();
        assert!(rep.fixed_group_ok && rep.image_group_ok);
        assert_eq!(rep.rescaled_dual_ok, Some(true));
        assert!(rep.all_pass());
        let erep = verify_evenness_remark(&dec).unwrap();
        assert!(erep.fixed_even && erep.image_even);
    }

    #[test]
    fn non_prime_order_rejected() {
        let l = Lattice::zn(2);
        // Order-4 rotation of the square lattice.
        let rot = Isometry::automorphism(&l, IntMatrix::from_i64(2, 2, &[0, 1, -1, 0])).unwrap();
        assert!(decompose(&l, &rot).is_err());
        // Identity has order 1.
        let id = Isometry::identity(2);
        assert!(decompose(&l, &id).is_err());
    }

    #[test]
    fn cyclotomic_reduction_and_conjugation() {
        let p = 5u64;
        // ζ^4 = −1 − ζ − ζ² − ζ³.
        let m4 = cyc_reduce(p, &[0, 0, 0, 0, 1].map(BigInt::from));
        assert_eq!(m4, [-1, -1, -1, -1].map(BigInt::from).to_vec());
        // ζ · ζ^4 = ζ^5 = 1.
        let z = cyc_reduce(p, &[0, 1].map(BigInt::from));
        assert_eq!(cyc_mul(p, &z, &m4), [1, 0, 0, 0].map(BigInt::from).to_vec());
        // Conjugation is an involution on random-ish elements.
        for coeffs in [[3, -2, 7, 1], [0, 1, 0, 0], [5, 5, 5, 5]] {
            let e = coeffs.map(BigInt::from).to_vec();
            assert_eq!(cyc_conj(p, &cyc_conj(p, &e)), e);
        }
        // Tr(1) = 4, Tr(ζ) = −1.
        assert_eq!(cyc_trace(p, &[1, 0, 0, 0].map(BigInt::from)), BigInt::from(4));
        assert_eq!(cyc_trace(p, &[0, 1, 0, 0].map(BigInt::from)), BigInt::from(-1));
    }

    #[test]
    fn hermitian_validation() {
        // Entry ζ paired against ζ instead of ζ^{−1} is not Hermitian.
        let zeta = [0, 1, 0, 0].map(BigInt::from).to_vec();
        let one = [1, 0, 0, 0].map(BigInt::from).to_vec();
        assert!(CyclotomicMatrix::new(
            5,
            2,
            vec![one.clone(), zeta.clone(), zeta.clone(), one.clone()]
        )
        .is_err());
        let zbar = cyc_conj(5, &zeta);
        assert!(CyclotomicMatrix::new(5, 2, vec![one.clone(), zeta, zbar, one]).is_ok());
    }

    #[test]
    fn trace_lattice_of_unit_form() {
        // p = 5: gram 5I − J on 4 coordinates, determinant 125.
        let one = [1, 0, 0, 0].map(BigInt::from).to_vec();
        let h = CyclotomicMatrix::new(5, 1, vec![one]).unwrap();
        let l = hermitian_trace_lattice(&h, &rat_i(1)).unwrap();
        assert_eq!(l.rank(), 4);
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == j { rat_i(4) } else { rat_i(-1) };
                assert_eq!(l.gram().at(i, j), &expect);
            }
        }
        assert_eq!(l.determinant(), rat_i(125));
        // The trace form of Z[ζ5] is the rescaled dual of A4.
        let a4_dual_scaled = an(4).dual().rescale(&rat_i(5)).unwrap();
        assert!(is_isometric(&l, &a4_dual_scaled, &opts()).unwrap().is_some());

        // p = 3: the hexagonal plane.
        let one3 = [1, 0].map(BigInt::from).to_vec();
        let h3 = CyclotomicMatrix::new(3, 1, vec![one3]).unwrap();
        let l3 = hermitian_trace_lattice(&h3, &rat_i(1)).unwrap();
        assert_eq!(l3.gram().at(0, 0), &rat_i(2));
        assert_eq!(l3.gram().at(0, 1), &rat_i(-1));
        assert!(is_isometric(&l3, &an(2), &opts()).unwrap().is_some());
    }

    #[test]
    fn trace_lattice_determinant_law() {
        // det = p^{(p−2)z} · Norm(det h); for the identity form the norm
        // factor is 1.
        for (p, z) in [(3u64, 1usize), (3, 2), (5, 1), (5, 2)] {
            let deg = (p - 1) as usize;
            let mut one = vec![BigInt::zero(); deg];
            one[0] = BigInt::one();
            let zero = vec![BigInt::zero(); deg];
            let mut entries = Vec::new();
            for i in 0..z {
                for j in 0..z {
                    entries.push(if i == j { one.clone() } else { zero.clone() });
                }
            }
            let h = CyclotomicMatrix::new(p, z, entries).unwrap();
            let l = hermitian_trace_lattice(&h, &rat_i(1)).unwrap();
            let expected = Rational::from(BigInt::from(p).pow((p as u32 - 2) * z as u32));
            assert_eq!(l.determinant(), expected);
        }
        // Off-diagonal entries: h = [[2, ζ], [ζ̄, 2]] over Z[ζ5] has
        // det h = 3, so det = 5^6 · Norm(3) = 5^6 · 81.
        let two = [2, 0, 0, 0].map(BigInt::from).to_vec();
        let zeta = [0, 1, 0, 0].map(BigInt::from).to_vec();
        let zbar = cyc_conj(5, &zeta);
        let h = CyclotomicMatrix::new(5, 2, vec![two.clone(), zeta, zbar, two]).unwrap();
        let l = hermitian_trace_lattice(&h, &rat_i(1)).unwrap();
        assert_eq!(
            l.determinant(),
            Rational::from(BigInt::from(5).pow(6) * BigInt::from(81))
        );
    }

    #[test]
    fn trace_lattice_scale_and_definiteness() {
        // Scaling by 1/5 turns 5I − J into a unimodular-determinant form
        // only after dualizing; here just check the scale law.
        let one = [1, 0, 0, 0].map(BigInt::from).to_vec();
        let h = CyclotomicMatrix::new(5, 1, vec![one.clone()]).unwrap();
        let l = hermitian_trace_lattice(&h, &rat(1, 5)).unwrap();
        assert_eq!(l.determinant(), rat(1, 5));
        // An indefinite Hermitian form is rejected by the gram validation.
        let minus = [-1, 0, 0, 0].map(BigInt::from).to_vec();
        let hneg = CyclotomicMatrix::new(5, 1, vec![minus]).unwrap();
        assert!(hermitian_trace_lattice(&hneg, &rat_i(1)).is_err());
    }

    #[test]
    fn block_sigma_matches_glue_class_action() {
        // The single-block rotation fixes the right A4 pointwise, so its
        // image sublattice must pair trivially with the fixed part.
        let l = glued_e8();
        let sigma = ambient_map_isometry(&l, &coxeter4().block_diag(&RatMatrix::identity(4)));
        let dec = decompose(&l, &sigma).unwrap();
        for i in 0..dec.fixed().rank() {
            for j in 0..dec.image().rank() {
                let x: AmbientVector = dec.fixed().basis().row(i).to_vec();
                let y: AmbientVector = dec.image().basis().row(j).to_vec();
                assert_eq!(l.inner(&x, &y), rat_i(0));
            }
        }
    }
}
