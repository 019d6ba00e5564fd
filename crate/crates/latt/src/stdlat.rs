//! Standard lattice constructions: root lattices A_n, D_n, E8, the glued
//! D16+ lattice, and the Leech lattice built from the extended binary Golay
//! code.

use num_traits::Zero;

use crate::lattice::{lattice_sum_vectors, Lattice};
use crate::mat::RatMatrix;
use crate::rat::{rat, rat_i, Rational};

/// Root lattice A_n via its tridiagonal Gram matrix (2 on the diagonal, -1
/// off it). Determinant n+1.
pub fn an(n: usize) -> Lattice {
    assert!(n >= 1);
    let mut g = RatMatrix::zero(n, n);
    for i in 0..n {
        *g.at_mut(i, i) = rat_i(2);
        if i + 1 < n {
            *g.at_mut(i, i + 1) = rat_i(-1);
            *g.at_mut(i + 1, i) = rat_i(-1);
        }
    }
    Lattice::from_gram(g)
        .expect("A_n gram is positive definite")
        .with_label(&format!("A{}", n))
}

/// Root lattice D_n inside Z^n: integer vectors with even coordinate sum.
/// Determinant 4 for n >= 3.
pub fn dn(n: usize) -> Lattice {
    assert!(n >= 2);
    let mut basis = RatMatrix::zero(n, n);
    for i in 0..n - 1 {
        *basis.at_mut(i, i) = rat_i(1);
        *basis.at_mut(i, i + 1) = rat_i(-1);
    }
    *basis.at_mut(n - 1, n - 2) = rat_i(1);
    *basis.at_mut(n - 1, n - 1) = rat_i(1);
    Lattice::new(RatMatrix::identity(n), basis, None)
        .expect("D_n basis has full rank")
        .with_label(&format!("D{}", n))
}

/// E8 as the index-2 overlattice of D8 glued by the all-halves vector.
pub fn e8() -> Lattice {
    let glue = vec![rat(1, 2); 8];
    lattice_sum_vectors(&dn(8), &[glue])
        .expect("glue vector lives in the ambient space")
        .with_label("E8")
}

/// The even unimodular lattice D16+ (D16 glued by the all-halves vector).
pub fn d16_plus() -> Lattice {
    let glue = vec![rat(1, 2); 16];
    lattice_sum_vectors(&dn(16), &[glue])
        .expect("glue vector lives in the ambient space")
        .with_label("D16+")
}

/// The orthogonal sum E8 | E8.
pub fn e8_e8() -> Lattice {
    e8().orthogonal_sum(&e8()).with_label("E8+E8")
}

/// Basis of the extended binary Golay code [24,12,8]: the cyclic [23,12,7]
/// code with generator polynomial x^11+x^10+x^6+x^5+x^4+x^2+1, extended by
/// an overall parity bit.
pub fn golay_basis() -> Vec<[u8; 24]> {
    const G: [u8; 12] = [1, 0, 1, 0, 1, 1, 1, 0, 0, 0, 1, 1]; // coefficients of x^0..x^11
    let mut rows = Vec::with_capacity(12);
    for shift in 0..12 {
        let mut w = [0u8; 24];
        for (k, &c) in G.iter().enumerate() {
            w[shift + k] = c;
        }
        let parity: u8 = w[..23].iter().sum::<u8>() % 2;
        w[23] = parity;
        rows.push(w);
    }
    rows
}

/// All 4096 codewords of the extended Golay code as bitmasks.
pub fn golay_codewords() -> Vec<u32> {
    let basis: Vec<u32> = golay_basis()
        .iter()
        .map(|w| {
            w.iter()
                .enumerate()
                .fold(0u32, |acc, (i, &b)| acc | ((b as u32) << i))
        })
        .collect();
    let mut words = Vec::with_capacity(1 << 12);
    for mask in 0u32..(1 << 12) {
        let mut c = 0u32;
        for (i, b) in basis.iter().enumerate() {
            if mask & (1 << i) != 0 {
                c ^= b;
            }
        }
        words.push(c);
    }
    words
}

/// The Leech lattice, scaled so the minimum is 4: ambient form I/8 on Z^24,
/// generated by doubled Golay words, coordinate-pair vectors 4e_i +- 4e_j,
/// and the odd vector (-3,1,...,1).
pub fn leech() -> Lattice {
    let m = 24;
    let form = RatMatrix::identity(m).scale(&rat(1, 8));
    let mut gens: Vec<Vec<Rational>> = Vec::new();
    for w in golay_basis() {
        gens.push(w.iter().map(|&b| rat_i(2 * b as i64)).collect());
    }
    for i in 1..m {
        let mut v = vec![Rational::zero(); m];
        v[0] = rat_i(4);
        v[i] = rat_i(-4);
        gens.push(v);
    }
    let mut v = vec![Rational::zero(); m];
    v[0] = rat_i(4);
    v[1] = rat_i(4);
    gens.push(v);
    let mut odd = vec![rat_i(1); m];
    odd[0] = rat_i(-3);
    gens.push(odd);

    let zero = Lattice::new(form, RatMatrix::zero(0, m), None).expect("ambient form is definite");
    let l = lattice_sum_vectors(&zero, &gens).expect("generators live in the ambient space");
    // Ship a reduced basis: enumeration preconditions in O(n^2) afterwards.
    let (reduced, _) = crate::lll::lll_reduce(&l, &crate::lll::default_delta())
        .expect("Leech gram is positive definite");
    reduced.with_label("Leech")
}
