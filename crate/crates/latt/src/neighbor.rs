//! Kneser p-neighbors of integral lattices and genus exploration.
//!
//! A p-neighbor of an integral lattice L is an integral lattice N of the
//! same determinant with [L : L ∩ N] = [N : L ∩ N] = p. Every neighbor
//! arises from a witness vector v ∈ L \ pL whose norm is divisible by p²
//! (2p² when L is even, which keeps the neighbor even):
//!
//!   N = {x ∈ L : (x, v) ≡ 0 mod p} + Z·(v/p).
//!
//! Walking the neighbor relation and collapsing isometric results explores
//! the genus of the seed. The walk reports the classes it visited, the
//! explored relation edges, and the accumulated mass Σ 1/|Aut|; at p = 2 an
//! odd seed can step to even lattices and back, so class lists for odd
//! seeds are informational rather than a genus enumeration.

use std::collections::{BTreeSet, VecDeque};

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::enumerate::{enumerate_short, kissing_number, minimum, EnumOptions};
use crate::error::{Error, Result};
use crate::glue::is_prime_u64;
use crate::isom::{automorphism_group, is_isometric_with_symmetry, IsometryGroup};
use crate::lattice::{lattice_intersection, lattice_sum_vectors, AmbientVector, Lattice};
use crate::lll::{default_delta, lll_reduce};
use crate::mat::RatMatrix;
use crate::rat::{rat_i, Rational};

/// One neighbor construction: the source lattice, the adjusted witness
/// that was actually used, the prime, and the resulting lattice.
#[derive(Debug, Clone)]
pub struct NeighborStep {
    pub source: Lattice,
    pub witness: AmbientVector,
    pub prime: u64,
    pub result: Lattice,
}

/// Norm divisor an admissible witness must reach. 2p² keeps an even
/// lattice even; p² is what integrality of the result needs on an odd
/// lattice, where 2p² is unreachable at p = 2 (the norm class of a witness
/// mod 2p² shifts only by multiples of 4 there).
fn admissible_modulus(l: &Lattice, p: u64) -> BigInt {
    let sq = BigInt::from(p) * BigInt::from(p);
    if l.is_even() {
        sq * 2
    } else {
        sq
    }
}

fn norm_divisible(norm: &Rational, modulus: &BigInt) -> bool {
    norm.is_integer() && (norm.numer() % modulus).is_zero()
}

fn residue_u64(x: &BigInt, p: u64) -> u64 {
    let pb = BigInt::from(p);
    let mut r = x % &pb;
    if r.is_negative() {
        r += &pb;
    }
    r.to_u64().expect("reduced residue fits")
}

fn inv_mod(a: u64, p: u64) -> u64 {
    // Fermat inverse; p is prime and a is nonzero mod p.
    let mut base = a % p;
    let mut exp = p - 2;
    let mut acc: u64 = 1;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = ((acc as u128 * base as u128) % p as u128) as u64;
        }
        base = ((base as u128 * base as u128) % p as u128) as u64;
        exp >>= 1;
    }
    acc
}

fn validate_prime(p: u64) -> Result<()> {
    if !is_prime_u64(p) {
        return Err(Error::Input(format!("neighbor prime {p} is not prime")));
    }
    if p >= 1 << 31 {
        return Err(Error::Input(
            "neighbor primes beyond 2^31 are not supported".into(),
        ));
    }
    Ok(())
}

/// Integer coordinates of `v` in the basis of `l`, or the input errors
/// that rule it out as a witness.
fn witness_coords(l: &Lattice, v: &AmbientVector, p: u64) -> Result<Vec<BigInt>> {
    let coords = l
        .coords_of(v)
        .ok_or_else(|| Error::Inadmissible("witness does not lie in the lattice".into()))?;
    let mut out = Vec::with_capacity(coords.len());
    for c in &coords {
        if !c.is_integer() {
            return Err(Error::Inadmissible("witness does not lie in the lattice".into()));
        }
        out.push(c.numer().clone());
    }
    if out.iter().all(|c| residue_u64(c, p) == 0) {
        return Err(Error::Inadmissible(format!(
            "witness lies in {p} times the lattice"
        )));
    }
    Ok(out)
}

/// Adjusts `v` within its coset v + pL to an admissible witness: norm
/// divisible by 2p² (even lattice) or p² (odd lattice). The correction scan
/// is deterministic: zero first, then single basis multiples, then pairs of
/// basis multiples, coefficients 1..2p-1 in order. Two basis terms always
/// suffice when any correction works, because the reachable norm residues
/// are controlled by (v, u) mod p together with the norm parity of u, both
/// linear in u.
pub fn adjust_witness(l: &Lattice, v: &AmbientVector, p: u64) -> Result<AmbientVector> {
    validate_prime(p)?;
    if !l.is_integral() {
        return Err(Error::Input(
            "neighbor source lattice must be integral".into(),
        ));
    }
    witness_coords(l, v, p)?;

    let modulus = admissible_modulus(l, p);
    let a = l.norm(v);
    if norm_divisible(&a, &modulus) {
        return Ok(v.clone());
    }

    let n = l.rank();
    let g = l.gram();
    let t: Vec<Rational> = (0..n).map(|i| l.inner(v, l.basis().row(i))).collect();
    let two_p = rat_i(2 * p as i64);
    let p_sq = rat_i((p * p) as i64);
    let reach = 2 * p;

    let build = |terms: &[(usize, u64)]| -> AmbientVector {
        let mut w = v.clone();
        for &(i, c) in terms {
            let s = rat_i((p * c) as i64);
            for (t, x) in l.basis().row(i).iter().enumerate() {
                w[t] += &s * x;
            }
        }
        w
    };

    for i in 0..n {
        for alpha in 1..reach {
            let al = rat_i(alpha as i64);
            let norm = &a + &two_p * &al * &t[i] + &p_sq * &al * &al * g.at(i, i);
            if norm_divisible(&norm, &modulus) {
                return Ok(build(&[(i, alpha)]));
            }
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            for alpha in 1..reach {
                let al = rat_i(alpha as i64);
                for beta in 1..reach {
                    let be = rat_i(beta as i64);
                    let lin = &al * &t[i] + &be * &t[j];
                    let quad = &al * &al * g.at(i, i)
                        + rat_i(2) * &al * &be * g.at(i, j)
                        + &be * &be * g.at(j, j);
                    let norm = &a + &two_p * lin + &p_sq * quad;
                    if norm_divisible(&norm, &modulus) {
                        return Ok(build(&[(i, alpha), (j, beta)]));
                    }
                }
            }
        }
    }
    Err(Error::Inadmissible(
        "witness norm cannot be adjusted to the admissible class".into(),
    ))
}

/// Builds the p-neighbor of `l` at the witness `v`, adjusting `v` within
/// v + pL first. The result is re-verified from scratch: integral, equal
/// determinant, index p against the source on both sides of the
/// intersection, and even whenever the source is even.
pub fn neighbor_step(l: &Lattice, v: &AmbientVector, p: u64) -> Result<NeighborStep> {
    let w = adjust_witness(l, v, p)?;
    let n = l.rank();

    // Pairings of the basis with the witness, reduced mod p. A witness
    // pairing to zero with everything would enlarge the lattice instead of
    // stepping sideways, so it is rejected.
    let mut t = Vec::with_capacity(n);
    for i in 0..n {
        let x = l.inner(l.basis().row(i), &w);
        debug_assert!(x.is_integer());
        t.push(residue_u64(x.numer(), p));
    }
    let pivot = t.iter().position(|&x| x != 0).ok_or_else(|| {
        Error::Inadmissible(
            "witness pairs to zero with the whole lattice modulo p; \
             the neighbor construction would change the determinant"
            .into(),
        )
    })?;
    let inv = inv_mod(t[pivot], p);

    let p_rat = rat_i(p as i64);
    let mut rows: Vec<AmbientVector> = Vec::with_capacity(n);
    for j in 0..n {
        if j == pivot {
            rows.push(l.basis().row(j).iter().map(|x| x * &p_rat).collect());
        } else {
            let c = rat_i(((t[j] as u128 * inv as u128) % p as u128) as i64);
            let bj = l.basis().row(j);
            let bp = l.basis().row(pivot);
            rows.push(
                bj.iter()
                    .zip(bp.iter())
                    .map(|(x, y)| x - &c * y)
                    .collect(),
            );
        }
    }
    let sub = Lattice::new(
        l.ambient_form().clone(),
        RatMatrix::from_rows(rows),
        None,
    )?;
    let w_over_p: AmbientVector = w.iter().map(|x| x / &p_rat).collect();
    let result = lattice_sum_vectors(&sub, &[w_over_p])?;

    if !result.is_integral() {
        return Err(Error::Verification("neighbor result is not integral".into()));
    }
    if l.is_even() && !result.is_even() {
        return Err(Error::Verification(
            "neighbor of an even lattice came out odd".into(),
        ));
    }
    if result.determinant() != l.determinant() {
        return Err(Error::Verification(
            "neighbor changed the determinant".into(),
        ));
    }
    let inter = lattice_intersection(l, &result)?;
    let want = BigInt::from(p);
    if inter.index_in(l) != Some(want.clone()) || inter.index_in(&result) != Some(want) {
        return Err(Error::Verification(
            "neighbor indices are not p on both sides".into(),
        ));
    }

    Ok(NeighborStep {
        source: l.clone(),
        witness: w,
        prime: p,
        result,
    })
}

/// The neighbor lattice alone.
pub fn p_neighbor(l: &Lattice, v: &AmbientVector, p: u64) -> Result<Lattice> {
    neighbor_step(l, v, p).map(|s| s.result)
}

/// The first admissible witness in short-vector order, scanning enumeration
/// shells of growing bound. Shorter witnesses give cheaper neighbor steps.
pub fn first_admissible_witness(
    l: &Lattice,
    p: u64,
    opts: &EnumOptions,
) -> Result<AmbientVector> {
    validate_prime(p)?;
    if !l.is_integral() {
        return Err(Error::Input(
            "neighbor source lattice must be integral".into(),
        ));
    }
    if l.rank() == 0 {
        return Err(Error::Input(
            "rank-zero lattice has no neighbor witnesses".into(),
        ));
    }
    let mut bound = minimum(l, opts)? * rat_i(p as i64);
    for _ in 0..6 {
        let rep = enumerate_short(l, &bound, opts)?;
        for (coords, _) in &rep.vectors {
            if coords.iter().all(|c| residue_u64(c, p) == 0) {
                continue;
            }
            let rc: Vec<Rational> = coords.iter().map(|c| Rational::from(c.clone())).collect();
            let v = l.vector_from_coords(&rc);
            if let Ok(w) = adjust_witness(l, &v, p) {
                return Ok(w);
            }
        }
        bound *= rat_i(2);
    }
    Err(Error::Inadmissible(
        "no admissible witness found within the enumeration bound".into(),
    ))
}

/// Stopping rules for a genus walk. `jobs` parallelizes neighbor
/// construction within one frontier class; 0 or 1 means serial, and every
/// setting produces identical output.
#[derive(Debug, Clone, Default)]
pub struct WalkLimits {
    pub max_classes: Option<usize>,
    pub max_steps: Option<usize>,
    pub jobs: usize,
}

/// Result of a neighbor walk: canonical class representatives sorted by
/// (minimum, kissing number) with discovery order breaking ties, their
/// automorphism group orders, the explored neighbor relations as index
/// pairs, and the mass Σ 1/|Aut| over the classes found.
#[derive(Debug, Clone)]
pub struct GenusWalk {
    pub classes: Vec<Lattice>,
    pub aut_orders: Vec<BigInt>,
    pub edges: Vec<(usize, usize)>,
    pub mass: Rational,
    pub complete: bool,
    pub p_divides_det: bool,
}

struct ClassRec {
    rep: Lattice,
    min: Rational,
    kissing: u64,
    aut: IsometryGroup,
}

const LINE_SPACE_CAP: u128 = 1 << 22;

/// Orbit representatives of the lines of L/pL under the automorphism group
/// of `rep`, as coordinate vectors with first nonzero entry 1, one per
/// orbit, lexicographically least first.
fn line_orbit_reps(rep: &Lattice, aut: &IsometryGroup, p: u64) -> Result<Vec<Vec<u64>>> {
    let n = rep.rank();
    let mut space: u128 = 1;
    for _ in 0..n {
        space = space
            .checked_mul(p as u128)
            .filter(|s| *s <= LINE_SPACE_CAP)
            .ok_or_else(|| {
                Error::Input(format!(
                    "residue space {p}^{n} exceeds the walk's line enumeration cap"
                ))
            })?;
    }
    let gens: Vec<Vec<Vec<u64>>> = aut
        .generators()
        .iter()
        .map(|g| {
            let m = g.matrix();
            (0..n)
                .map(|i| (0..n).map(|j| residue_u64(m.at(i, j), p)).collect())
                .collect()
        })
        .collect();

    let encode = |x: &[u64]| -> usize {
        let mut code: u128 = 0;
        for &c in x.iter().rev() {
            code = code * p as u128 + c as u128;
        }
        code as usize
    };
    let normalize = |x: &mut [u64]| {
        let lead = x.iter().find(|&&c| c != 0).copied().unwrap_or(0);
        if lead > 1 {
            let s = inv_mod(lead, p);
            for c in x.iter_mut() {
                *c = ((*c as u128 * s as u128) % p as u128) as u64;
            }
        }
    };
    let apply = |x: &[u64], m: &[Vec<u64>]| -> Vec<u64> {
        (0..n)
            .map(|j| {
                let mut acc: u128 = 0;
                for (i, &xi) in x.iter().enumerate() {
                    acc += xi as u128 * m[i][j] as u128;
                }
                (acc % p as u128) as u64
            })
            .collect()
    };

    let mut visited = vec![false; space as usize];
    let mut reps = Vec::new();
    let mut point = vec![0u64; n];
    'outer: loop {
        // Advance the odometer over F_p^n in lex order.
        let mut k = 0;
        loop {
            if k == n {
                break 'outer;
            }
            point[k] += 1;
            if point[k] < p {
                break;
            }
            point[k] = 0;
            k += 1;
        }
        let mut line = point.clone();
        normalize(&mut line);
        if line != point || visited[encode(&line)] {
            continue;
        }
        reps.push(line.clone());
        let mut frontier = vec![line.clone()];
        visited[encode(&line)] = true;
        while let Some(x) = frontier.pop() {
            for m in &gens {
                let mut y = apply(&x, m);
                normalize(&mut y);
                let code = encode(&y);
                if !visited[code] {
                    visited[code] = true;
                    frontier.push(y);
                }
            }
        }
    }
    Ok(reps)
}

fn reduced_invariants(
    nb: &Lattice,
    opts: &EnumOptions,
) -> Result<(Lattice, Rational, u64)> {
    let (red, _) = lll_reduce(nb, &default_delta())?;
    let (mn, ks) = kissing_number(&red, opts)?;
    Ok((red, mn, ks))
}

/// Breadth-first closure of the neighbor relation at `p` starting from
/// `seed`, with isometry deduplication against cached automorphism groups.
/// The classical closure guarantee needs p coprime to the determinant; the
/// walk still runs otherwise and reports `p_divides_det` so callers can
/// flag the output as informational.
pub fn genus_walk(
    seed: &Lattice,
    p: u64,
    limits: &WalkLimits,
    opts: &EnumOptions,
) -> Result<GenusWalk> {
    validate_prime(p)?;
    if !seed.is_integral() {
        return Err(Error::Input("genus walk seed must be integral".into()));
    }
    let det = seed.determinant();
    let p_divides_det = (det.numer() % BigInt::from(p)).is_zero();
    if seed.rank() == 0 {
        return Ok(GenusWalk {
            classes: vec![seed.clone()],
            aut_orders: vec![BigInt::one()],
            edges: Vec::new(),
            mass: Rational::one(),
            complete: true,
            p_divides_det,
        });
    }

    let jobs = limits.jobs.max(1);
    let mut classes: Vec<ClassRec> = Vec::new();
    let mut edges: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut queue: VecDeque<usize> = VecDeque::new();
    let mut complete = true;
    let mut steps_used = 0usize;

    {
        let (red, mn, ks) = reduced_invariants(seed, opts)?;
        let aut = automorphism_group(&red, None, opts)?;
        classes.push(ClassRec {
            rep: red,
            min: mn,
            kissing: ks,
            aut,
        });
        queue.push_back(0);
    }
    let cap_hit =
        |classes: &Vec<ClassRec>| limits.max_classes.is_some_and(|m| classes.len() >= m);
    if cap_hit(&classes) {
        complete = false;
        queue.clear();
    }

    'outer: while let Some(ci) = queue.pop_front() {
        let reps = line_orbit_reps(&classes[ci].rep, &classes[ci].aut, p)?;
        let mut work: Vec<AmbientVector> = Vec::new();
        for c in reps {
            let rc: Vec<Rational> = c.iter().map(|&x| rat_i(x as i64)).collect();
            let v = classes[ci].rep.vector_from_coords(&rc);
            if let Ok(w) = adjust_witness(&classes[ci].rep, &v, p) {
                work.push(w);
            }
        }
        let mut truncated = false;
        if let Some(ms) = limits.max_steps {
            let remaining = ms.saturating_sub(steps_used);
            if work.len() > remaining {
                work.truncate(remaining);
                truncated = true;
                complete = false;
            }
        }
        steps_used += work.len();

        let source = &classes[ci].rep;
        let built: Vec<Result<(Lattice, Rational, u64)>> = if jobs > 1 {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs)
                .build()
                .map_err(|e| Error::Input(format!("thread pool: {e}")))?;
            pool.install(|| {
                work.par_iter()
                    .map(|w| reduced_invariants(&neighbor_step(source, w, p)?.result, opts))
                    .collect()
            })
        } else {
            work.iter()
                .map(|w| reduced_invariants(&neighbor_step(source, w, p)?.result, opts))
                .collect()
        };

        for b in built {
            let (red, mn, ks) = b?;
            let mut found = None;
            for (j, cl) in classes.iter().enumerate() {
                if cl.min == mn
                    && cl.kissing == ks
                    && is_isometric_with_symmetry(&red, &cl.rep, Some(&cl.aut), opts)?.is_some()
                {
                    found = Some(j);
                    break;
                }
            }
            match found {
                Some(j) => {
                    edges.insert((ci, j));
                }
                None => {
                    let aut = automorphism_group(&red, None, opts)?;
                    classes.push(ClassRec {
                        rep: red,
                        min: mn,
                        kissing: ks,
                        aut,
                    });
                    let j = classes.len() - 1;
                    edges.insert((ci, j));
                    queue.push_back(j);
                    if cap_hit(&classes) {
                        complete = false;
                        break 'outer;
                    }
                }
            }
        }
        if truncated {
            break 'outer;
        }
    }
    if !queue.is_empty() {
        complete = false;
    }

    // Canonical final order: sort by invariant key, discovery order on ties.
    let mut perm: Vec<usize> = (0..classes.len()).collect();
    perm.sort_by(|&i, &j| {
        classes[i]
            .min
            .cmp(&classes[j].min)
            .then(classes[i].kissing.cmp(&classes[j].kissing))
            .then(i.cmp(&j))
    });
    let mut place = vec![0usize; classes.len()];
    for (new_i, &old_i) in perm.iter().enumerate() {
        place[old_i] = new_i;
    }
    let edges: Vec<(usize, usize)> = edges
        .into_iter()
        .map(|(a, b)| (place[a], place[b]))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();

    let mut out_classes = Vec::with_capacity(classes.len());
    let mut aut_orders = Vec::with_capacity(classes.len());
    let mut mass = Rational::zero();
    let mut recs: Vec<Option<ClassRec>> = classes.into_iter().map(Some).collect();
    for &old_i in &perm {
        let rec = recs[old_i].take().expect("permutation is a bijection");
        mass += Rational::new(BigInt::one(), rec.aut.order().clone());
        aut_orders.push(rec.aut.order().clone());
        out_classes.push(rec.rep);
    }

    Ok(GenusWalk {
        classes: out_classes,
        aut_orders,
        edges,
        mass,
        complete,
        p_divides_det,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isom::is_isometric;
    use crate::rat::rat;
    use crate::stdlat::{an, d16_plus, e8, e8_e8};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn opts() -> EnumOptions {
        EnumOptions::default()
    }

    fn amb(v: &[i64]) -> AmbientVector {
        v.iter().map(|&x| rat_i(x)).collect()
    }

    #[test]
    fn z4_neighbor_and_exact_back_step() {
        let l = Lattice::zn(4);
        let step = neighbor_step(&l, &amb(&[1, 1, 1, 1]), 2).unwrap();
        // The witness was already admissible: norm 4 on an odd lattice.
        assert_eq!(step.witness, amb(&[1, 1, 1, 1]));
        let n = &step.result;
        assert!(!n.same_lattice(&l));
        assert!(n.contains(&[rat(1, 2), rat(1, 2), rat(1, 2), rat(1, 2)]));
        assert!(n.is_integral() && !n.is_even());
        assert!(is_isometric(n, &l, &opts()).unwrap().is_some());

        // Independent re-check of the index structure.
        let inter = lattice_intersection(&l, n).unwrap();
        assert_eq!(inter.index_in(&l), Some(BigInt::from(2)));
        assert_eq!(inter.index_in(n), Some(BigInt::from(2)));

        // Doubling a vector of L outside N is a witness stepping exactly
        // back: the reverse neighbor is L itself, not merely a copy.
        assert!(!n.contains(&amb(&[1, 0, 0, 0])));
        let back = p_neighbor(n, &amb(&[2, 0, 0, 0]), 2).unwrap();
        assert!(back.same_lattice(&l));
    }

    #[test]
    fn z2_admits_no_neighbor() {
        let l = Lattice::zn(2);
        // No primitive vector of Z² has norm divisible by 4, and correction
        // by 2L cannot change the norm class mod 4.
        for a in -2i64..=2 {
            for b in -2i64..=2 {
                if a % 2 == 0 && b % 2 == 0 {
                    continue;
                }
                assert!(adjust_witness(&l, &amb(&[a, b]), 2).is_err());
            }
        }
        let walk = genus_walk(&l, 2, &WalkLimits::default(), &opts()).unwrap();
        assert_eq!(walk.classes.len(), 1);
        assert!(walk.edges.is_empty());
        assert!(walk.complete);
        assert_eq!(walk.mass, rat(1, 8));
        assert!(!walk.p_divides_det);
    }

    #[test]
    fn e8_neighbors_stay_in_class() {
        let l = e8();
        // Roots are inadmissible at p = 2: their norm class 2 mod 4 cannot
        // reach 0 mod 8 by even corrections.
        let root = l.basis().row_vec(0);
        assert_eq!(l.norm(&root), rat_i(2));
        assert!(adjust_witness(&l, &root, 2).is_err());

        let w = first_admissible_witness(&l, 2, &opts()).unwrap();
        assert!((l.norm(&w).numer() % BigInt::from(8)).is_zero());
        let n = p_neighbor(&l, &w, 2).unwrap();
        assert!(n.is_even() && n.is_unimodular());
        assert!(is_isometric(&n, &l, &opts()).unwrap().is_some());
    }

    #[test]
    fn random_even_steps_preserve_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let primes = [2u64, 3, 5];
        let mut steps = 0;
        let mut tries = 0;
        while steps < 50 {
            tries += 1;
            assert!(tries < 4000, "witness scan stalled");
            let dim = rng.gen_range(2..=6usize);
            // Random even gram 2·BBᵀ with B invertible over the rationals.
            let g = loop {
                let rows: Vec<Vec<Rational>> = (0..dim)
                    .map(|_| (0..dim).map(|_| rat_i(rng.gen_range(-2..=2i64))).collect())
                    .collect();
                let b = RatMatrix::from_rows(rows);
                let mut g = RatMatrix::zero(dim, dim);
                let mut singular = false;
                for i in 0..dim {
                    for j in 0..dim {
                        let mut acc = Rational::zero();
                        for k in 0..dim {
                            acc += b.at(i, k) * b.at(j, k);
                        }
                        *g.at_mut(i, j) = acc * rat_i(2);
                    }
                }
                for i in 0..dim {
                    if g.at(i, i).is_zero() {
                        singular = true;
                    }
                }
                if !singular {
                    if let Ok(l) = Lattice::from_gram(g.clone()) {
                        break l;
                    }
                }
            };
            let p = primes[rng.gen_range(0..primes.len())];
            let coords: Vec<Rational> = (0..dim)
                .map(|_| rat_i(rng.gen_range(0..p as i64)))
                .collect();
            if coords.iter().all(|c| c.is_zero()) {
                continue;
            }
            let v = g.vector_from_coords(&coords);
            let step = match neighbor_step(&g, &v, p) {
                Ok(s) => s,
                Err(_) => continue,
            };
            let n = &step.result;
            assert!(n.is_integral());
            assert!(n.is_even());
            assert_eq!(n.determinant(), g.determinant());
            let inter = lattice_intersection(&g, n).unwrap();
            assert_eq!(inter.index_in(&g), Some(BigInt::from(p)));
            assert_eq!(inter.index_in(n), Some(BigInt::from(p)));
            steps += 1;
        }
    }

    #[test]
    fn a2_split_inert_and_ramified_primes() {
        let a2 = an(2);
        // 7 is represented: witnesses exist and the unique class returns.
        let w = first_admissible_witness(&a2, 7, &opts()).unwrap();
        let n = p_neighbor(&a2, &w, 7).unwrap();
        assert!(is_isometric(&n, &a2, &opts()).unwrap().is_some());
        let walk7 = genus_walk(&a2, 7, &WalkLimits::default(), &opts()).unwrap();
        assert_eq!(walk7.classes.len(), 1);
        assert_eq!(walk7.edges, vec![(0, 0)]);
        assert_eq!(walk7.mass, rat(1, 12));
        assert!(walk7.complete && !walk7.p_divides_det);

        // 5 is inert for the hexagonal form: no primitive vector has norm
        // divisible by 5, so there are no admissible witnesses at all.
        assert!(first_admissible_witness(&a2, 5, &opts()).is_err());
        let walk5 = genus_walk(&a2, 5, &WalkLimits::default(), &opts()).unwrap();
        assert_eq!(walk5.classes.len(), 1);
        assert!(walk5.edges.is_empty() && walk5.complete);

        // 3 divides the determinant: the isotropic vector pairs to zero
        // with the whole lattice mod 3, the walk flags the prime and ends.
        let walk3 = genus_walk(&a2, 3, &WalkLimits::default(), &opts()).unwrap();
        assert!(walk3.p_divides_det);
        assert_eq!(walk3.classes.len(), 1);
        assert!(walk3.edges.is_empty() && walk3.complete);
    }

    #[test]
    fn e8_walk_is_single_class() {
        let walk = genus_walk(&e8(), 2, &WalkLimits::default(), &opts()).unwrap();
        assert_eq!(walk.classes.len(), 1);
        assert_eq!(walk.aut_orders, vec![BigInt::from(696729600u64)]);
        assert_eq!(walk.mass, rat(1, 696729600));
        assert_eq!(walk.edges, vec![(0, 0)]);
        assert!(walk.complete && !walk.p_divides_det);
        assert!(is_isometric(&walk.classes[0], &e8(), &opts()).unwrap().is_some());

        // Schedule independence: parallel construction merges in the same
        // order and must reproduce the serial walk exactly.
        let par = genus_walk(
            &e8(),
            2,
            &WalkLimits { jobs: 4, ..WalkLimits::default() },
            &opts(),
        )
        .unwrap();
        assert_eq!(par.classes.len(), walk.classes.len());
        assert!(par.classes[0].same_lattice(&walk.classes[0]));
        assert_eq!(par.edges, walk.edges);
        assert_eq!(par.mass, walk.mass);
        assert_eq!(par.aut_orders, walk.aut_orders);
    }

    #[test]
    fn dim16_walk_from_both_seeds() {
        let expect_e8e8 = BigInt::from(970864271032320000u64);
        let expect_d16 = BigInt::from(685597979049984000u64);
        let expect_mass = Rational::new(
            BigInt::from(691u64),
            "277667181515243520000".parse::<BigInt>().unwrap(),
        );

        let from_sum = genus_walk(&e8_e8(), 2, &WalkLimits::default(), &opts()).unwrap();
        assert_eq!(from_sum.classes.len(), 2);
        assert!(from_sum.complete && !from_sum.p_divides_det);
        assert_eq!(from_sum.aut_orders, vec![expect_e8e8.clone(), expect_d16.clone()]);
        assert_eq!(from_sum.mass, expect_mass);
        assert!(is_isometric(&from_sum.classes[0], &e8_e8(), &opts()).unwrap().is_some());
        assert!(is_isometric(&from_sum.classes[1], &d16_plus(), &opts()).unwrap().is_some());
        assert_eq!(from_sum.edges, vec![(0, 0), (0, 1), (1, 0), (1, 1)]);

        // Same genus from the other seed: the discovery order flips but
        // the class set, the orders, and the mass are identical.
        let from_half = genus_walk(&d16_plus(), 2, &WalkLimits::default(), &opts()).unwrap();
        assert_eq!(from_half.classes.len(), 2);
        assert!(from_half.complete);
        assert_eq!(from_half.aut_orders, vec![expect_d16, expect_e8e8]);
        assert_eq!(from_half.mass, expect_mass);
        assert!(is_isometric(&from_half.classes[0], &d16_plus(), &opts()).unwrap().is_some());
        assert!(is_isometric(&from_half.classes[1], &e8_e8(), &opts()).unwrap().is_some());
    }

    #[test]
    fn z8_walk_crosses_to_the_even_world() {
        // At p = 2 an odd seed can reach even lattices: the all-ones
        // witness turns Z⁸ into the even unimodular lattice. The class
        // list is informational, not a genus enumeration.
        let l = Lattice::zn(8);
        let n = p_neighbor(&l, &amb(&[1; 8]), 2).unwrap();
        assert!(n.is_even());
        assert!(is_isometric(&n, &e8(), &opts()).unwrap().is_some());

        let walk = genus_walk(&l, 2, &WalkLimits::default(), &opts()).unwrap();
        assert_eq!(walk.classes.len(), 2);
        assert!(walk.complete);
        assert_eq!(walk.classes[0].gram().at(0, 0), &rat_i(1));
        assert!(is_isometric(&walk.classes[1], &e8(), &opts()).unwrap().is_some());
        // The even class cannot step back to the odd one, so its only
        // outgoing edge is the self-loop.
        assert!(walk.edges.contains(&(0, 1)));
        assert!(!walk.edges.contains(&(1, 0)));
    }

    #[test]
    fn walk_limits_flag_partial_results() {
        let capped = genus_walk(
            &e8(),
            2,
            &WalkLimits { max_classes: Some(1), ..WalkLimits::default() },
            &opts(),
        )
        .unwrap();
        assert_eq!(capped.classes.len(), 1);
        assert!(!capped.complete);
        assert!(capped.edges.is_empty());

        let starved = genus_walk(
            &e8(),
            2,
            &WalkLimits { max_steps: Some(0), ..WalkLimits::default() },
            &opts(),
        )
        .unwrap();
        assert_eq!(starved.classes.len(), 1);
        assert!(!starved.complete);
        assert!(starved.edges.is_empty());
    }

    #[test]
    fn input_validation() {
        let l = Lattice::zn(4);
        assert!(p_neighbor(&l, &amb(&[1, 1, 1, 1]), 6).is_err());
        assert!(p_neighbor(&l, &vec![rat(1, 2); 4], 2).is_err());
        assert!(p_neighbor(&l, &amb(&[2, 0, 0, 0]), 2).is_err());
        assert!(genus_walk(&l, 9, &WalkLimits::default(), &opts()).is_err());
        let scaled = l.rescale(&rat(1, 2)).unwrap();
        assert!(!scaled.is_integral());
        assert!(p_neighbor(&scaled, &amb(&[1, 1, 1, 1]), 2).is_err());
        assert!(genus_walk(&scaled, 2, &WalkLimits::default(), &opts()).is_err());
    }
}
