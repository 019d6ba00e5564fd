//! Gluing along discriminant groups: overlattices generated by coset pairs,
//! integrality and evenness predicates, enumeration of F_p-subspaces of an
//! elementary discriminant group, and the coset minimum census used to
//! select glue subspaces.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::disc::DiscriminantGroup;
use crate::enumerate::{coset_minimum, EnumOptions};
use crate::error::{Error, Result};
use crate::lattice::{lattice_sum_vectors, AmbientVector, Lattice};
use crate::rat::{mod_one, Rational};

pub(crate) fn is_prime_u64(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    if p % 2 == 0 {
        return p == 2;
    }
    let mut d = 3u64;
    while d * d <= p {
        if p % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// A pair of coset representatives: b in the dual of the left factor, c in
/// the dual of the right factor, glued as the joined vector (b | c).
#[derive(Clone, Debug)]
pub struct GlueVector {
    pub left: AmbientVector,
    pub right: AmbientVector,
}

/// A glue code between two integral lattices: the subgroup of
/// (A#/A) x (B#/B) generated by the given vectors, of order p^rank.
#[derive(Clone, Debug)]
pub struct GlueCode {
    left: Lattice,
    right: Lattice,
    p: u64,
    generators: Vec<GlueVector>,
    rank: usize,
    joined: Lattice,
    joined_gens: Vec<AmbientVector>,
    over: Lattice,
}

impl GlueCode {
    /// Joins the ambient spaces orthogonally, validates that every generator
    /// pair lies in the duals with p-torsion classes, and fixes the rank s
    /// from the index [overlattice : A + B] = p^s.
    pub fn new(
        left: Lattice,
        right: Lattice,
        p: u64,
        generators: Vec<GlueVector>,
    ) -> Result<GlueCode> {
        if !is_prime_u64(p) {
            return Err(Error::Input(format!("glue modulus {p} is not prime")));
        }
        if !left.is_integral() || !right.is_integral() {
            return Err(Error::Input("glue factors must be integral".into()));
        }
        let ldual = left.dual();
        let rdual = right.dual();
        let pr = Rational::from(BigInt::from(p));
        for g in &generators {
            if g.left.len() != left.ambient_dim() || g.right.len() != right.ambient_dim() {
                return Err(Error::Input("glue vector has wrong ambient dimension".into()));
            }
            if !ldual.contains(&g.left) || !rdual.contains(&g.right) {
                return Err(Error::Input("glue vector leaves the dual lattice".into()));
            }
            let pl: AmbientVector = g.left.iter().map(|x| x * &pr).collect();
            let prr: AmbientVector = g.right.iter().map(|x| x * &pr).collect();
            if !left.contains(&pl) || !right.contains(&prr) {
                return Err(Error::Input("glue class is not p-torsion".into()));
            }
        }
        let joined = left.orthogonal_sum(&right);
        let joined_gens: Vec<AmbientVector> = generators
            .iter()
            .map(|g| {
                let mut v = g.left.clone();
                v.extend(g.right.iter().cloned());
                v
            })
            .collect();
        let over = lattice_sum_vectors(&joined, &joined_gens)?;
        let mut index = joined
            .index_in(&over)
            .expect("the overlattice contains its glue base");
        let mut rank = 0usize;
        let pb = BigInt::from(p);
        while index > BigInt::one() {
            let (q, r) = index.div_rem(&pb);
            if !r.is_zero() {
                return Err(Error::Input(
                    "glue group order is not a power of p".into(),
                ));
            }
            index = q;
            rank += 1;
        }
        Ok(GlueCode {
            left,
            right,
            p,
            generators,
            rank,
            joined,
            joined_gens,
            over,
        })
    }

    pub fn left(&self) -> &Lattice {
        &self.left
    }

    pub fn right(&self) -> &Lattice {
        &self.right
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn generators(&self) -> &[GlueVector] {
        &self.generators
    }

    /// A ⊥ B inside the joined ambient space.
    pub fn joined(&self) -> &Lattice {
        &self.joined
    }

    /// The lattice generated by A ⊥ B and all glue vectors. Its determinant
    /// satisfies det·p^{2s} = det(A)·det(B); integrality is not implied.
    pub fn overlattice(&self) -> Lattice {
        self.over.clone()
    }

    /// True iff all pairwise products of glue generators are integers.
    /// Products against A ⊥ B are integral already because the generators
    /// lie in the duals, so this decides integrality of the overlattice.
    pub fn is_integral(&self) -> bool {
        let n = self.joined_gens.len();
        for i in 0..n {
            for j in i..n {
                let prod = self.joined.inner(&self.joined_gens[i], &self.joined_gens[j]);
                if !mod_one(&prod).is_zero() {
                    return false;
                }
            }
        }
        true
    }

    /// True iff the overlattice is even: both factors even, products
    /// integral, and every generator of even norm.
    pub fn is_even_glue(&self) -> bool {
        if !self.left.is_even() || !self.right.is_even() || !self.is_integral() {
            return false;
        }
        self.joined_gens.iter().all(|g| {
            let norm = self.joined.norm(g);
            norm.is_integer() && norm.to_integer().is_even()
        })
    }
}

/// Evenness of the glue via the discriminant quadratic forms: the code is
/// even iff Q_A(b) + Q_B(c) vanishes mod Z on every element (b, c) of the
/// generated group. Walks all p^g combinations of the g generators.
pub fn even_glue_by_forms(
    code: &GlueCode,
    da: &DiscriminantGroup,
    db: &DiscriminantGroup,
) -> Result<bool> {
    if !da.parent().same_lattice(code.left()) || !db.parent().same_lattice(code.right()) {
        return Err(Error::Input(
            "discriminant groups do not belong to the glue factors".into(),
        ));
    }
    let g = code.generators().len();
    let p = code.p();
    let left_classes: Vec<Vec<BigInt>> = code
        .generators()
        .iter()
        .map(|v| da.class_coords(&v.left))
        .collect::<Result<_>>()?;
    let right_classes: Vec<Vec<BigInt>> = code
        .generators()
        .iter()
        .map(|v| db.class_coords(&v.right))
        .collect::<Result<_>>()?;
    let mut lambda = vec![0u64; g];
    loop {
        let mut a = vec![BigInt::zero(); da.num_factors()];
        let mut b = vec![BigInt::zero(); db.num_factors()];
        for (i, &c) in lambda.iter().enumerate() {
            let cb = BigInt::from(c);
            a = da.add(&a, &da.scale(&cb, &left_classes[i]));
            b = db.add(&b, &db.scale(&cb, &right_classes[i]));
        }
        let q = da.quadratic(&a)? + db.quadratic(&b)?;
        if !mod_one(&q).is_zero() {
            return Ok(false);
        }
        // Odometer over F_p^g.
        let mut pos = 0;
        while pos < g {
            lambda[pos] += 1;
            if lambda[pos] < p {
                break;
            }
            lambda[pos] = 0;
            pos += 1;
        }
        if pos == g {
            return Ok(true);
        }
    }
}

/// True iff (c_i, c_j) ≡ −(b_i, b_j) mod Z entrywise, with products taken
/// on exact coset representatives in the respective ambient spaces.
pub fn gram_congruence_check(
    a: &Lattice,
    left_classes: &[AmbientVector],
    b: &Lattice,
    right_classes: &[AmbientVector],
) -> Result<bool> {
    if left_classes.len() != right_classes.len() {
        return Err(Error::Input("frame length mismatch".into()));
    }
    let n = left_classes.len();
    for i in 0..n {
        for j in i..n {
            let lhs = b.inner(&right_classes[i], &right_classes[j]);
            let rhs = a.inner(&left_classes[i], &left_classes[j]);
            if !mod_one(&(lhs + rhs)).is_zero() {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Iterator over the k-dimensional subspaces of a p-elementary discriminant
/// group, one reduced echelon basis per subspace. Pivot column sets advance
/// lexicographically and free entries run through an odometer, so the order
/// is deterministic and the count is the Gaussian binomial.
pub struct SubspaceIter {
    p: u64,
    r: usize,
    k: usize,
    pivots: Vec<usize>,
    free_cells: Vec<(usize, usize)>,
    free_vals: Vec<u64>,
    done: bool,
}

fn free_cells_for(pivots: &[usize], r: usize) -> Vec<(usize, usize)> {
    let mut cells = Vec::new();
    for (i, &pi) in pivots.iter().enumerate() {
        for j in (pi + 1)..r {
            if !pivots.contains(&j) {
                cells.push((i, j));
            }
        }
    }
    cells
}

impl SubspaceIter {
    fn current(&self) -> Vec<Vec<u64>> {
        let mut basis = vec![vec![0u64; self.r]; self.k];
        for (i, &pi) in self.pivots.iter().enumerate() {
            basis[i][pi] = 1;
        }
        for (cell, &v) in self.free_cells.iter().zip(&self.free_vals) {
            basis[cell.0][cell.1] = v;
        }
        basis
    }

    fn advance(&mut self) {
        // Odometer over free entries, last cell fastest.
        let mut pos = self.free_vals.len();
        while pos > 0 {
            self.free_vals[pos - 1] += 1;
            if self.free_vals[pos - 1] < self.p {
                return;
            }
            self.free_vals[pos - 1] = 0;
            pos -= 1;
        }
        // Next pivot combination in lexicographic order.
        let mut i = self.k;
        loop {
            if i == 0 {
                self.done = true;
                return;
            }
            i -= 1;
            let max = self.r - (self.k - i);
            if self.pivots[i] < max {
                self.pivots[i] += 1;
                for j in (i + 1)..self.k {
                    self.pivots[j] = self.pivots[j - 1] + 1;
                }
                break;
            }
        }
        self.free_cells = free_cells_for(&self.pivots, self.r);
        self.free_vals = vec![0; self.free_cells.len()];
    }
}

impl Iterator for SubspaceIter {
    type Item = Vec<Vec<u64>>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let basis = self.current();
        if self.k == 0 {
            self.done = true;
        } else {
            self.advance();
        }
        Some(basis)
    }
}

/// The k-dimensional subspaces of a p-elementary discriminant group.
pub fn subspaces(d: &DiscriminantGroup, k: usize) -> Result<SubspaceIter> {
    let orders = d.orders();
    let p = match orders.first() {
        None => {
            // Trivial group: only the zero subspace at k = 0.
            return Ok(SubspaceIter {
                p: 2,
                r: 0,
                k,
                pivots: Vec::new(),
                free_cells: Vec::new(),
                free_vals: Vec::new(),
                done: k > 0,
            });
        }
        Some(p) => p.clone(),
    };
    let pu = u64::try_from(&p).map_err(|_| Error::Input("prime too large".into()))?;
    if !is_prime_u64(pu) || !d.is_elementary(&p) {
        return Err(Error::Input(
            "subspace enumeration needs a p-elementary discriminant group".into(),
        ));
    }
    let r = d.num_factors();
    if k > r {
        return Ok(SubspaceIter {
            p: pu,
            r,
            k,
            pivots: Vec::new(),
            free_cells: Vec::new(),
            free_vals: Vec::new(),
            done: true,
        });
    }
    let pivots: Vec<usize> = (0..k).collect();
    let free_cells = free_cells_for(&pivots, r);
    let free_vals = vec![0; free_cells.len()];
    Ok(SubspaceIter {
        p: pu,
        r,
        k,
        pivots,
        free_cells,
        free_vals,
        done: false,
    })
}

/// Number of nonzero classes in the F_p-span of the given subspace basis
/// whose coset minimum equals `norm_target`.
pub fn class_minimum_census(
    d: &DiscriminantGroup,
    subspace: &[Vec<u64>],
    norm_target: &Rational,
    opts: &EnumOptions,
) -> Result<usize> {
    let orders = d.orders();
    let p = match orders.first() {
        None => return Ok(0),
        Some(p) => p.clone(),
    };
    let pu = u64::try_from(&p).map_err(|_| Error::Input("prime too large".into()))?;
    if !is_prime_u64(pu) || !d.is_elementary(&p) {
        return Err(Error::Input(
            "census needs a p-elementary discriminant group".into(),
        ));
    }
    let r = d.num_factors();
    for row in subspace {
        if row.len() != r {
            return Err(Error::Input("subspace row has wrong length".into()));
        }
    }
    let k = subspace.len();
    let mut count = 0usize;
    let mut lambda = vec![0u64; k];
    'outer: loop {
        // Advance past the all-zero combination before evaluating.
        let mut pos = 0;
        while pos < k {
            lambda[pos] += 1;
            if lambda[pos] < pu {
                break;
            }
            lambda[pos] = 0;
            pos += 1;
        }
        if pos == k {
            break 'outer;
        }
        let mut coords = vec![BigInt::zero(); r];
        for (row, &c) in subspace.iter().zip(&lambda) {
            for (j, &e) in row.iter().enumerate() {
                coords[j] += BigInt::from(e) * BigInt::from(c);
            }
        }
        for c in coords.iter_mut() {
            *c = c.mod_floor(&p);
        }
        if coords.iter().all(|c| c.is_zero()) {
            continue;
        }
        let rep = d.representative(&coords);
        if &coset_minimum(d.parent(), &rep, opts)? == norm_target {
            count += 1;
        }
    }
    Ok(count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disc::discriminant_group;
    use crate::enumerate::{kissing_number, minimum};
    use crate::isom::is_isometric;
    use crate::rat::{rat, rat_i};
    use crate::stdlat::{an, dn, e8};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn opts() -> EnumOptions {
        EnumOptions::default()
    }

    fn half_vector(n: usize) -> AmbientVector {
        (0..n).map(|_| rat(1, 2)).collect()
    }

    fn zero_lattice() -> Lattice {
        Lattice::zn(0)
    }

    #[test]
    fn empty_code_gives_orthogonal_sum() {
        let code = GlueCode::new(an(4), an(4), 5, Vec::new()).unwrap();
        assert_eq!(code.rank(), 0);
        assert!(code.is_integral());
        assert!(code.is_even_glue());
        let over = code.overlattice();
        assert!(over.same_lattice(&an(4).orthogonal_sum(&an(4))));
    }

    #[test]
    fn d8_half_vector_glue_is_e8() {
        let code = GlueCode::new(
            dn(8),
            zero_lattice(),
            2,
            vec![GlueVector {
                left: half_vector(8),
                right: Vec::new(),
            }],
        )
        .unwrap();
        assert_eq!(code.rank(), 1);
        assert!(code.is_integral());
        assert!(code.is_even_glue());
        let over = code.overlattice();
        assert!(over.is_even());
        assert!(over.is_unimodular());
        let (min, kiss) = kissing_number(&over, &opts()).unwrap();
        assert_eq!(min, rat_i(2));
        assert_eq!(kiss, 240);
        assert!(is_isometric(&over, &e8(), &opts()).unwrap().is_some());
    }

    /// Representative of a discriminant class with the requested quadratic
    /// value, if one exists.
    fn class_with_q(d: &DiscriminantGroup, q: &Rational) -> Option<AmbientVector> {
        d.all_classes()
            .into_iter()
            .find(|c| &d.quadratic(c).unwrap() == q)
            .map(|c| d.representative(&c))
    }

    #[test]
    fn a4_a4_glue_pairing_opposite_q_is_e8() {
        let a = an(4);
        let d = discriminant_group(&a).unwrap();
        let b = class_with_q(&d, &rat(2, 5)).unwrap();
        let c = class_with_q(&d, &rat(3, 5)).unwrap();
        let code = GlueCode::new(
            a.clone(),
            a.clone(),
            5,
            vec![GlueVector {
                left: b.clone(),
                right: c,
            }],
        )
        .unwrap();
        assert_eq!(code.rank(), 1);
        assert!(code.is_integral());
        assert!(code.is_even_glue());
        let over = code.overlattice();
        assert!(over.is_even());
        assert!(over.is_unimodular());
        assert_eq!(minimum(&over, &opts()).unwrap(), rat_i(2));
        assert!(is_isometric(&over, &e8(), &opts()).unwrap().is_some());

        // Pairing two classes of equal quadratic value fails evenness.
        let bad = GlueCode::new(
            a.clone(),
            a,
            5,
            vec![GlueVector {
                left: b.clone(),
                right: b,
            }],
        )
        .unwrap();
        assert!(!bad.is_integral());
        assert!(!bad.is_even_glue());
    }

    #[test]
    fn determinant_law_holds() {
        let a = an(4);
        let d = discriminant_group(&a).unwrap();
        let b = class_with_q(&d, &rat(2, 5)).unwrap();
        let c = class_with_q(&d, &rat(3, 5)).unwrap();
        let code = GlueCode::new(
            a.clone(),
            a.clone(),
            5,
            vec![GlueVector { left: b, right: c }],
        )
        .unwrap();
        let over = code.overlattice();
        let p2s = rat_i(25);
        assert_eq!(over.determinant() * p2s, a.determinant() * a.determinant());
    }

    #[test]
    fn torsion_and_dual_membership_validated() {
        let a = an(4);
        let d = discriminant_group(&a).unwrap();
        let b = class_with_q(&d, &rat(2, 5)).unwrap();
        // Wrong torsion prime.
        assert!(GlueCode::new(
            a.clone(),
            a.clone(),
            2,
            vec![GlueVector {
                left: b.clone(),
                right: b.clone(),
            }],
        )
        .is_err());
        // Vector outside the dual.
        let outside: AmbientVector = (0..5).map(|_| rat(1, 3)).collect();
        assert!(GlueCode::new(
            a.clone(),
            a,
            5,
            vec![GlueVector {
                left: outside,
                right: b,
            }],
        )
        .is_err());
    }

    #[test]
    fn congruence_check_cases() {
        let a = an(4);
        assert!(gram_congruence_check(&a, &[], &a, &[]).unwrap());
        let d = discriminant_group(&a).unwrap();
        let b = class_with_q(&d, &rat(2, 5)).unwrap();
        let c = class_with_q(&d, &rat(3, 5)).unwrap();
        // (c,c) = 6/5 ≡ 1/5 and −(b,b) = −4/5 ≡ 1/5 mod Z.
        assert!(gram_congruence_check(&a, &[b.clone()], &a, &[c]).unwrap());
        assert!(!gram_congruence_check(&a, &[b.clone()], &a, &[b.clone()]).unwrap());
        assert!(gram_congruence_check(&a, &[b.clone()], &a, &[]).is_err());
        // Reduction convention: a diagonal entry −12/5 must be met by 3/5.
        assert_eq!(mod_one(&rat(-12, 5)), rat(3, 5));
    }

    fn gaussian_binomial(p: u64, r: usize, k: usize) -> u64 {
        let mut num = 1u128;
        let mut den = 1u128;
        for i in 0..k {
            num *= (p as u128).pow(r as u32) - (p as u128).pow(i as u32);
            den *= (p as u128).pow(k as u32) - (p as u128).pow(i as u32);
        }
        u64::try_from(num / den).unwrap()
    }

    #[test]
    fn subspace_counts_match_gaussian_binomials() {
        let d2 = discriminant_group(&an(4).orthogonal_sum(&an(4))).unwrap();
        assert_eq!(subspaces(&d2, 1).unwrap().count(), 6);
        assert_eq!(gaussian_binomial(5, 2, 1), 6);
        let triple = an(4).orthogonal_sum(&an(4)).orthogonal_sum(&an(4));
        let d3 = discriminant_group(&triple).unwrap();
        assert_eq!(subspaces(&d3, 2).unwrap().count(), 31);
        assert_eq!(gaussian_binomial(5, 3, 2), 31);
        assert_eq!(subspaces(&d3, 0).unwrap().count(), 1);
        assert_eq!(subspaces(&d3, 4).unwrap().count(), 0);
        let d4 = discriminant_group(&dn(4)).unwrap();
        assert_eq!(subspaces(&d4, 1).unwrap().count(), 3);
        assert_eq!(gaussian_binomial(2, 2, 1), 3);
    }

    #[test]
    fn subspace_order_is_deterministic_echelon() {
        let d2 = discriminant_group(&an(4).orthogonal_sum(&an(4))).unwrap();
        let all: Vec<_> = subspaces(&d2, 1).unwrap().collect();
        let expected: Vec<Vec<Vec<u64>>> = vec![
            vec![vec![1, 0]],
            vec![vec![1, 1]],
            vec![vec![1, 2]],
            vec![vec![1, 3]],
            vec![vec![1, 4]],
            vec![vec![0, 1]],
        ];
        assert_eq!(all, expected);
    }

    #[test]
    fn non_elementary_group_rejected() {
        // Z/4 discriminant group.
        let l = Lattice::from_gram(crate::mat::RatMatrix::from_i64(1, 1, &[4])).unwrap();
        let d = discriminant_group(&l).unwrap();
        assert!(subspaces(&d, 1).is_err());
        assert!(class_minimum_census(&d, &[vec![1]], &rat_i(1), &opts()).is_err());
    }

    /// Exhaustive shifted-box minimum, independent of the enumeration code.
    fn brute_coset_minimum(l: &Lattice, shift: &AmbientVector) -> Rational {
        let n = l.rank();
        assert!(n <= 4);
        let mut best: Option<Rational> = None;
        let range = 4i64;
        let mut coeffs = vec![-range; n];
        loop {
            let mut v = shift.clone();
            for (i, &c) in coeffs.iter().enumerate() {
                for (x, b) in v.iter_mut().zip(l.basis().row(i)) {
                    *x += b * rat_i(c);
                }
            }
            let norm = l.norm(&v);
            if best.as_ref().map_or(true, |b| &norm < b) {
                best = Some(norm);
            }
            let mut pos = 0;
            while pos < n {
                coeffs[pos] += 1;
                if coeffs[pos] <= range {
                    break;
                }
                coeffs[pos] = -range;
                pos += 1;
            }
            if pos == n {
                break;
            }
        }
        best.unwrap()
    }

    #[test]
    fn a4_census_splits_by_coset_minimum() {
        let a = an(4);
        let d = discriminant_group(&a).unwrap();
        // Independent oracle: the four nonzero classes have minima
        // {4/5, 6/5, 6/5, 4/5}.
        let mut minima: Vec<Rational> = d
            .all_classes()
            .into_iter()
            .skip(1)
            .map(|c| brute_coset_minimum(&a, &d.representative(&c)))
            .collect();
        minima.sort();
        assert_eq!(minima, vec![rat(4, 5), rat(4, 5), rat(6, 5), rat(6, 5)]);
        let line = vec![vec![1u64]];
        assert_eq!(class_minimum_census(&d, &line, &rat(4, 5), &opts()).unwrap(), 2);
        assert_eq!(class_minimum_census(&d, &line, &rat(6, 5), &opts()).unwrap(), 2);
        assert_eq!(class_minimum_census(&d, &line, &rat_i(1), &opts()).unwrap(), 0);
        assert_eq!(class_minimum_census(&d, &[], &rat(4, 5), &opts()).unwrap(), 0);
    }

    #[test]
    fn even_glue_agrees_with_discriminant_forms() {
        let palette: Vec<(u64, Lattice)> = vec![
            (2, dn(4)),
            (2, dn(8)),
            (3, an(2)),
            (5, an(4)),
        ];
        let mut rng = StdRng::seed_from_u64(11);
        let mut checked = 0;
        while checked < 200 {
            let (p, parent) = &palette[rng.gen_range(0..palette.len())];
            let d = discriminant_group(parent).unwrap();
            let classes = d.all_classes();
            let gens: Vec<GlueVector> = (0..rng.gen_range(1..=2))
                .map(|_| GlueVector {
                    left: d.representative(&classes[rng.gen_range(0..classes.len())]),
                    right: d.representative(&classes[rng.gen_range(0..classes.len())]),
                })
                .collect();
            let code = GlueCode::new(parent.clone(), parent.clone(), *p, gens).unwrap();
            let direct = code.is_even_glue();
            let by_forms = even_glue_by_forms(&code, &d, &d).unwrap();
            assert_eq!(direct, by_forms);
            // Determinant law on every sampled code.
            let over = code.overlattice();
            let p2s = rat_i((*p as i64).pow(2 * code.rank() as u32));
            assert_eq!(
                over.determinant() * p2s,
                parent.determinant() * parent.determinant()
            );
            if code.is_even_glue() {
                assert!(over.is_even());
            }
            if code.is_integral() {
                assert!(over.is_integral());
            }
            checked += 1;
        }
    }

    #[test]
    fn evenness_at_two_tracks_norms_mod_two() {
        // Every nonzero class of the D4 discriminant group has Q = 1/2, so
        // pairing any two of them glues evenly: 1/2 + 1/2 ≡ 0 mod Z.
        let d4 = dn(4);
        let d = discriminant_group(&d4).unwrap();
        let hv = half_vector(4);
        assert!(d4.dual().contains(&hv));
        let q = d.quadratic(&d.class_coords(&hv).unwrap()).unwrap();
        assert_eq!(q, mod_one(&(d4.norm(&hv) / rat_i(2))));
        assert_eq!(q, rat(1, 2));
        let e1: AmbientVector = vec![rat_i(1), rat_i(0), rat_i(0), rat_i(0)];
        let single = GlueCode::new(
            d4.clone(),
            d4.clone(),
            2,
            vec![GlueVector {
                left: hv.clone(),
                right: e1,
            }],
        )
        .unwrap();
        assert_eq!(single.rank(), 1);
        assert!(single.is_even_glue());
        assert!(single.overlattice().is_even());
        assert_eq!(single.overlattice().determinant(), rat_i(4));

        // The diagonal code of rank 2 glues D4 ⊥ D4 all the way to E8.
        let hm: AmbientVector = vec![rat(1, 2), rat(1, 2), rat(1, 2), rat(-1, 2)];
        let diag = GlueCode::new(
            d4.clone(),
            d4,
            2,
            vec![
                GlueVector {
                    left: hv.clone(),
                    right: hv.clone(),
                },
                GlueVector {
                    left: hm.clone(),
                    right: hm.clone(),
                },
            ],
        )
        .unwrap();
        assert_eq!(diag.rank(), 2);
        assert!(diag.is_even_glue());
        let over = diag.overlattice();
        assert!(over.is_even());
        assert!(over.is_unimodular());
        assert_eq!(minimum(&over, &opts()).unwrap(), rat_i(2));
        assert!(is_isometric(&over, &e8(), &opts()).unwrap().is_some());

        // A 2-torsion class of odd integral norm: half the generator of the
        // gram-(4) lattice has norm 1, giving an integral but odd glue.
        let four = Lattice::from_gram(crate::mat::RatMatrix::from_i64(1, 1, &[4])).unwrap();
        let odd = GlueCode::new(
            four,
            zero_lattice(),
            2,
            vec![GlueVector {
                left: vec![rat(1, 2)],
                right: Vec::new(),
            }],
        )
        .unwrap();
        assert_eq!(odd.rank(), 1);
        assert!(odd.is_integral());
        assert!(!odd.is_even_glue());
        let over = odd.overlattice();
        assert!(over.is_integral());
        assert!(!over.is_even());
        assert_eq!(over.determinant(), rat_i(1));
    }

    #[test]
    fn prime_validation() {
        assert!(is_prime_u64(2));
        assert!(is_prime_u64(5));
        assert!(!is_prime_u64(1));
        assert!(!is_prime_u64(6));
        assert!(GlueCode::new(an(4), an(4), 4, Vec::new()).is_err());
    }
}
