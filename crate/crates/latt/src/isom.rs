//! Automorphism groups and isometry testing by backtracking over short-vector
//! sets, stabilizer-chain order computation, and the induced action on
//! discriminant groups with orbit and stabilizer machinery.

use std::collections::{HashMap, VecDeque};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::disc::DiscriminantGroup;
use crate::enumerate::{enumerate_short, EnumOptions};
use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::lll::{default_delta, lll_reduce};
use crate::mat::{IntMatrix, RatMatrix};
use crate::rat::Rational;

/// An isometry given by an integer matrix whose rows express the images of
/// the source basis vectors in target coordinates. For an automorphism the
/// source and target coincide and m · G · mᵀ = G.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Isometry {
    m: IntMatrix,
}

impl Isometry {
    /// An automorphism of `l`; the gram relation is checked exactly.
    pub fn automorphism(l: &Lattice, m: IntMatrix) -> Result<Self> {
        Self::witness(l, l, m)
    }

    /// An isometry from `src` onto `tgt`: m · gram(tgt) · mᵀ = gram(src).
    /// The determinant is ±1 whenever the two determinants agree.
    pub fn witness(src: &Lattice, tgt: &Lattice, m: IntMatrix) -> Result<Self> {
        if m.rows() != src.rank() || m.cols() != tgt.rank() {
            return Err(Error::NotIsometry(format!(
                "matrix is {}x{}, expected {}x{}",
                m.rows(),
                m.cols(),
                src.rank(),
                tgt.rank()
            )));
        }
        let mr = m.to_rat();
        if mr.mul(tgt.gram()).mul(&mr.transpose()) != *src.gram() {
            return Err(Error::NotIsometry("gram matrix is not preserved".into()));
        }
        Ok(Isometry { m })
    }

    pub fn identity(n: usize) -> Self {
        Isometry {
            m: IntMatrix::identity(n),
        }
    }

    pub fn matrix(&self) -> &IntMatrix {
        &self.m
    }

    pub fn is_identity(&self) -> bool {
        self.m == IntMatrix::identity(self.m.rows())
    }

    /// Apply `self`, then `other`.
    pub fn compose(&self, other: &Isometry) -> Isometry {
        Isometry {
            m: self.m.mul(&other.m),
        }
    }

    pub fn inverse(&self) -> Result<Isometry> {
        Ok(Isometry {
            m: self.m.inverse_unimodular()?,
        })
    }

    /// Image of a lattice vector given by coordinate row x: x ↦ x·m.
    pub fn apply_coords(&self, x: &[Rational]) -> Vec<Rational> {
        let n = self.m.rows();
        assert_eq!(x.len(), n);
        (0..self.m.cols())
            .map(|j| {
                let mut acc = Rational::zero();
                for (k, xi) in x.iter().enumerate() {
                    if !xi.is_zero() {
                        acc += xi * Rational::from_integer(self.m.at(k, j).clone());
                    }
                }
                acc
            })
            .collect()
    }
}

/// A group of automorphisms of one lattice: generators plus the exact order
/// computed from a stabilizer chain over the short-vector action.
#[derive(Clone, Debug)]
pub struct IsometryGroup {
    lattice: Lattice,
    generators: Vec<Isometry>,
    order: BigInt,
}

impl IsometryGroup {
    pub fn new(lattice: Lattice, generators: Vec<IntMatrix>, order: BigInt) -> Result<Self> {
        let generators = generators
            .into_iter()
            .map(|m| Isometry::automorphism(&lattice, m))
            .collect::<Result<Vec<_>>>()?;
        Ok(IsometryGroup {
            lattice,
            generators,
            order,
        })
    }

    pub fn trivial(lattice: Lattice) -> Self {
        IsometryGroup {
            lattice,
            generators: Vec::new(),
            order: BigInt::one(),
        }
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn generators(&self) -> &[Isometry] {
        &self.generators
    }

    pub fn order(&self) -> &BigInt {
        &self.order
    }
}

/// Scaled short-vector data for one side of a backtracking search, in the
/// reduced basis. Holds both signs of every vector. All products of two set
/// vectors fit in i64 by Cauchy-Schwarz against the largest norm.
struct VecSet {
    n: usize,
    /// Flattened coordinates, one n-block per vector.
    coords: Vec<i64>,
    /// gram · vᵀ per vector, same layout.
    gv: Vec<i64>,
    /// Scaled integer norms per vector.
    norms: Vec<i64>,
    /// (norm, vector indices), ascending by norm.
    by_norm: Vec<(i64, Vec<u32>)>,
    index_of: HashMap<Vec<i64>, u32>,
}

const COORD_LIMIT: i64 = 1 << 31;

fn narrow(x: i128, what: &str) -> Result<i64> {
    i64::try_from(x).map_err(|_| Error::Input(format!("{} exceeds the i64 range", what)))
}

impl VecSet {
    fn build(reduced: &Lattice, bound: &Rational, scale: &BigInt, opts: &EnumOptions) -> Result<VecSet> {
        let n = reduced.rank();
        let scale_rat = Rational::from_integer(scale.clone());
        let mut gram = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let e = reduced.gram().at(i, j) * &scale_rat;
                debug_assert!(crate::rat::is_integer(&e));
                let v = e
                    .to_integer()
                    .to_i64()
                    .ok_or_else(|| Error::Input("gram entry too large for backtracking".into()))?;
                if v.abs() >= COORD_LIMIT {
                    return Err(Error::Input("gram entry too large for backtracking".into()));
                }
                gram.push(v);
            }
        }
        let report = enumerate_short(reduced, bound, opts)?;
        let mut coords: Vec<i64> = Vec::new();
        let mut norms: Vec<i64> = Vec::new();
        for (x, norm) in &report.vectors {
            let sn = norm * &scale_rat;
            let sni = sn
                .to_integer()
                .to_i64()
                .ok_or_else(|| Error::Input("vector norm too large for backtracking".into()))?;
            let mut xi = Vec::with_capacity(n);
            for c in x {
                let v = c
                    .to_i64()
                    .ok_or_else(|| Error::Input("vector coordinate too large for backtracking".into()))?;
                if v.abs() >= COORD_LIMIT {
                    return Err(Error::Input("vector coordinate too large for backtracking".into()));
                }
                xi.push(v);
            }
            coords.extend(xi.iter().copied());
            norms.push(sni);
            coords.extend(xi.iter().map(|c| -c));
            norms.push(sni);
        }
        let count = norms.len();
        if count >= u32::MAX as usize {
            return Err(Error::Input("short-vector set too large".into()));
        }
        let mut gv = Vec::with_capacity(count * n);
        for k in 0..count {
            let x = &coords[k * n..(k + 1) * n];
            for j in 0..n {
                let mut acc: i128 = 0;
                for a in 0..n {
                    acc += gram[j * n + a] as i128 * x[a] as i128;
                }
                gv.push(narrow(acc, "gram product")?);
            }
        }
        let mut groups: std::collections::BTreeMap<i64, Vec<u32>> = std::collections::BTreeMap::new();
        for (k, nm) in norms.iter().enumerate() {
            groups.entry(*nm).or_default().push(k as u32);
        }
        let by_norm = groups.into_iter().collect();
        let mut index_of = HashMap::with_capacity(count);
        for k in 0..count {
            index_of.insert(coords[k * n..(k + 1) * n].to_vec(), k as u32);
        }
        Ok(VecSet {
            n,
            coords,
            gv,
            norms,
            by_norm,
            index_of,
        })
    }

    fn vec(&self, k: u32) -> &[i64] {
        let k = k as usize;
        &self.coords[k * self.n..(k + 1) * self.n]
    }

    fn gv_of(&self, k: u32) -> &[i64] {
        let k = k as usize;
        &self.gv[k * self.n..(k + 1) * self.n]
    }

    /// Exact inner product of two set vectors.
    fn inner(&self, a: u32, b: u32) -> i64 {
        let x = self.vec(a);
        let y = self.gv_of(b);
        let mut acc: i128 = 0;
        for i in 0..self.n {
            acc += x[i] as i128 * y[i] as i128;
        }
        i64::try_from(acc).expect("product of set vectors is bounded by the maximal norm")
    }

    fn of_norm(&self, norm: i64) -> &[u32] {
        match self.by_norm.binary_search_by_key(&norm, |(n, _)| *n) {
            Ok(i) => &self.by_norm[i].1,
            Err(_) => &[],
        }
    }

    fn histogram(&self) -> Vec<(i64, usize)> {
        self.by_norm.iter().map(|(n, v)| (*n, v.len())).collect()
    }
}

fn vec_mul_i64(x: &[i64], m: &[i64], n: usize) -> Vec<i64> {
    let mut out = vec![0i64; n];
    for j in 0..n {
        let mut acc: i128 = 0;
        for k in 0..n {
            acc += x[k] as i128 * m[k * n + j] as i128;
        }
        out[j] = i64::try_from(acc).expect("image of a set vector stays small");
    }
    out
}

fn identity_i64(n: usize) -> Vec<i64> {
    let mut m = vec![0i64; n * n];
    for i in 0..n {
        m[i * n + i] = 1;
    }
    m
}

fn neg_identity_i64(n: usize) -> Vec<i64> {
    let mut m = vec![0i64; n * n];
    for i in 0..n {
        m[i * n + i] = -1;
    }
    m
}

/// Backtracking completion over the target vector set: assign one target
/// vector per source frame row so that all pairwise products match the
/// source frame gram. Rows are processed in the fixed order `ord`.
struct SearchCtx<'a> {
    tgt: &'a VecSet,
    n: usize,
    /// Source frame gram, scaled, n×n row major, original row indices.
    sgram: Vec<i64>,
    ord: Vec<usize>,
    /// Inverse of the source frame matrix when the frame is not the basis:
    /// leaves must then check integrality of frame⁻¹ · images.
    cinv: Option<RatMatrix>,
    nodes: u64,
    budget: u64,
}

impl SearchCtx<'_> {
    fn spend(&mut self) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.budget {
            Err(Error::BudgetExhausted {
                nodes: self.nodes,
                budget: self.budget,
            })
        } else {
            Ok(())
        }
    }

    /// Candidate lists for positions `from..n` given the vectors already
    /// placed at positions `0..from`. None if some list is empty.
    fn lists_after_prefix(&self, prefix: &[u32]) -> Option<Vec<Vec<u32>>> {
        let from = prefix.len();
        let mut lists = Vec::with_capacity(self.n - from);
        for p in from..self.n {
            let rp = self.ord[p];
            let mut pool: Vec<u32> = self.tgt.of_norm(self.sgram[rp * self.n + rp]).to_vec();
            for (j, &placed) in prefix.iter().enumerate() {
                let need = self.sgram[rp * self.n + self.ord[j]];
                pool.retain(|&w| self.tgt.inner(w, placed) == need);
                if pool.is_empty() {
                    return None;
                }
            }
            if pool.is_empty() {
                return None;
            }
            lists.push(pool);
        }
        Some(lists)
    }

    /// Rows of the image matrix in original row order; row ord[k] is the
    /// target vector chosen for position k.
    fn assemble(&self, chosen: &[u32]) -> Vec<i64> {
        let mut y = vec![0i64; self.n * self.n];
        for (k, &v) in chosen.iter().enumerate() {
            let row = self.ord[k];
            y[row * self.n..(row + 1) * self.n].copy_from_slice(self.tgt.vec(v));
        }
        y
    }

    /// Full image matrix at a completed leaf, or None when the frame
    /// integrality check rejects it.
    fn leaf(&self, chosen: &[u32]) -> Option<Vec<i64>> {
        let y = self.assemble(chosen);
        match &self.cinv {
            None => Some(y),
            Some(cinv) => {
                let ymat = IntMatrix::from_i64(self.n, self.n, &y).to_rat();
                let t = cinv.mul(&ymat);
                if !t.is_integral() {
                    return None;
                }
                let mut out = vec![0i64; self.n * self.n];
                for i in 0..self.n {
                    for j in 0..self.n {
                        out[i * self.n + j] = t.at(i, j).to_integer().to_i64()?;
                    }
                }
                Some(out)
            }
        }
    }

    fn search(&mut self, chosen: &mut Vec<u32>, lists: &[Vec<u32>]) -> Result<Option<Vec<i64>>> {
        if lists.is_empty() {
            return Ok(self.leaf(chosen));
        }
        let depth = chosen.len();
        let (cur, rest) = lists.split_first().unwrap();
        for &v in cur {
            self.spend()?;
            let mut feasible = true;
            let mut refined: Vec<Vec<u32>> = Vec::with_capacity(rest.len());
            for (off, lj) in rest.iter().enumerate() {
                let pos = depth + 1 + off;
                let need = self.sgram[self.ord[pos] * self.n + self.ord[depth]];
                let f: Vec<u32> = lj
                    .iter()
                    .copied()
                    .filter(|&w| self.tgt.inner(w, v) == need)
                    .collect();
                if f.is_empty() {
                    feasible = false;
                    break;
                }
                refined.push(f);
            }
            if !feasible {
                continue;
            }
            chosen.push(v);
            let hit = self.search(chosen, &refined)?;
            chosen.pop();
            if hit.is_some() {
                return Ok(hit);
            }
        }
        Ok(None)
    }
}

/// Greedy processing order: repeatedly pick the unprocessed frame row with
/// the fewest source-side candidates compatible with the rows picked so far.
/// Also returns those per-level candidate lists (identity prefix).
fn greedy_order(src: &VecSet, srows: &[u32], sgram: &[i64]) -> (Vec<usize>, Vec<Vec<u32>>) {
    let n = srows.len();
    let mut pending: Vec<Option<Vec<u32>>> = (0..n)
        .map(|j| Some(src.of_norm(sgram[j * n + j]).to_vec()))
        .collect();
    let mut order = Vec::with_capacity(n);
    let mut cands = Vec::with_capacity(n);
    for _ in 0..n {
        let (jmin, _) = pending
            .iter()
            .enumerate()
            .filter_map(|(j, l)| l.as_ref().map(|l| (j, l.len())))
            .min_by_key(|&(j, len)| (len, j))
            .unwrap();
        let list = pending[jmin].take().unwrap();
        for (j, slot) in pending.iter_mut().enumerate() {
            if let Some(l) = slot {
                let need = sgram[j * n + jmin];
                l.retain(|&w| src.inner(w, srows[jmin]) == need);
            }
        }
        order.push(jmin);
        cands.push(list);
    }
    (order, cands)
}

/// A frame of n independent set vectors used as backtracking rows: the
/// reduced basis itself when the set covers all basis norms, otherwise a
/// greedily chosen independent subset of the set.
fn choose_frame(set: &VecSet, reduced: &Lattice) -> Result<(Vec<u32>, Option<RatMatrix>)> {
    let n = set.n;
    let basis_rows: Option<Vec<u32>> = (0..n)
        .map(|j| {
            let mut e = vec![0i64; n];
            e[j] = 1;
            set.index_of.get(&e).copied()
        })
        .collect();
    if let Some(rows) = basis_rows {
        return Ok((rows, None));
    }
    // Greedy independent subset in set order.
    let mut rows: Vec<u32> = Vec::new();
    let mut echelon: Vec<Vec<Rational>> = Vec::new();
    let count = set.norms.len() as u32;
    for k in 0..count {
        if rows.len() == n {
            break;
        }
        let mut v: Vec<Rational> = set.vec(k).iter().map(|&c| crate::rat::rat_i(c)).collect();
        for r in &echelon {
            let pivot = r.iter().position(|x| !x.is_zero()).unwrap();
            if !v[pivot].is_zero() {
                let f = &v[pivot] / &r[pivot];
                for (a, b) in v.iter_mut().zip(r) {
                    let t = b * &f;
                    *a -= t;
                }
            }
        }
        if v.iter().any(|x| !x.is_zero()) {
            rows.push(k);
            echelon.push(v);
        }
    }
    if rows.len() < n {
        return Err(Error::SpanningFailure);
    }
    let frame = RatMatrix::from_rows(
        rows.iter()
            .map(|&k| set.vec(k).iter().map(|&c| crate::rat::rat_i(c)).collect())
            .collect(),
    );
    let _ = reduced;
    Ok((rows, Some(frame.inverse()?)))
}

fn frame_gram(set: &VecSet, rows: &[u32]) -> Vec<i64> {
    let n = rows.len();
    let mut g = vec![0i64; n * n];
    for i in 0..n {
        for j in 0..n {
            g[i * n + j] = set.inner(rows[i], rows[j]);
        }
    }
    g
}

/// Grow `orbit` under right multiplication by the given automorphism
/// matrices. Only the orbit size feeds the order computation, so no
/// transversal is kept.
fn close_orbit(
    orbit: &mut std::collections::HashSet<Vec<i64>>,
    queue: &mut VecDeque<Vec<i64>>,
    gens: &[Vec<i64>],
    n: usize,
) {
    while let Some(x) = queue.pop_front() {
        for g in gens {
            let y = vec_mul_i64(&x, g, n);
            if orbit.insert(y.clone()) {
                queue.push_back(y);
            }
        }
    }
}

/// The full automorphism group of `l`, with order computed from a stabilizer
/// chain over a frame of short vectors. `depth_norm` bounds the vector set;
/// by default the maximal diagonal entry of the reduced gram, which makes
/// the reduced basis itself the frame.
pub fn automorphism_group(
    l: &Lattice,
    depth_norm: Option<&Rational>,
    opts: &EnumOptions,
) -> Result<IsometryGroup> {
    let n = l.rank();
    if n == 0 {
        return Ok(IsometryGroup::trivial(l.clone()));
    }
    let (red, u) = lll_reduce(l, &default_delta())?;
    let scale = red.gram().denominator();
    let max_diag = (0..n)
        .map(|i| red.gram().at(i, i))
        .max()
        .expect("positive rank")
        .clone();
    let bound = match depth_norm {
        None => max_diag,
        Some(d) => d.clone(),
    };
    let set = VecSet::build(&red, &bound, &scale, opts)?;
    let (srows, cinv) = choose_frame(&set, &red)?;
    let sgram = frame_gram(&set, &srows);
    let (ord, level_cands) = greedy_order(&set, &srows, &sgram);

    let mut ctx = SearchCtx {
        tgt: &set,
        n,
        sgram,
        ord,
        cinv,
        nodes: 0,
        budget: opts.budget,
    };

    let mut gens_red: Vec<Vec<i64>> = Vec::new();
    let mut order = BigInt::one();
    // Deeper levels first: their transversals fix every shorter prefix, so
    // each level closes its orbit under all previously found generators.
    for level in (0..n).rev() {
        let mut orbit: std::collections::HashSet<Vec<i64>> = std::collections::HashSet::new();
        let mut queue: VecDeque<Vec<i64>> = VecDeque::new();
        let seed = set.vec(srows[ctx.ord[level]]).to_vec();
        orbit.insert(seed.clone());
        queue.push_back(seed);
        let mut applicable: Vec<Vec<i64>> = gens_red.clone();
        if level == 0 {
            applicable.push(neg_identity_i64(n));
        }
        close_orbit(&mut orbit, &mut queue, &applicable, n);

        let prefix: Vec<u32> = (0..level).map(|j| srows[ctx.ord[j]]).collect();
        let cand_list = level_cands[level].clone();
        for v in cand_list {
            let vcoords = set.vec(v).to_vec();
            if orbit.contains(&vcoords) {
                continue;
            }
            let mut full_prefix = prefix.clone();
            full_prefix.push(v);
            let found = match ctx.lists_after_prefix(&full_prefix) {
                None => None,
                Some(lists) => {
                    let mut chosen = full_prefix.clone();
                    ctx.search(&mut chosen, &lists)?
                }
            };
            if let Some(t) = found {
                orbit.insert(vcoords.clone());
                gens_red.push(t.clone());
                applicable.push(t);
                queue.extend(orbit.iter().cloned());
                close_orbit(&mut orbit, &mut queue, &applicable, n);
            }
        }
        order *= BigInt::from(orbit.len());
    }
    if n > 0 {
        gens_red.push(neg_identity_i64(n));
    }

    // Convert to the original basis: reduced = u · original.
    let uinv = u.inverse_unimodular()?;
    let mut seen: Vec<Vec<i64>> = Vec::new();
    let mut gens = Vec::new();
    let id = identity_i64(n);
    for g in gens_red {
        if g == id || seen.contains(&g) {
            continue;
        }
        seen.push(g.clone());
        gens.push(uinv.mul(&IntMatrix::from_i64(n, n, &g)).mul(&u));
    }
    IsometryGroup::new(l.clone(), gens, order)
}

/// Node cap for the first attempt of an isometry test whose top-level
/// candidate list is large: if it runs out, the target's own automorphism
/// group is computed and the search is rerun over one candidate per orbit.
const FIRST_ATTEMPT_CAP: u64 = 50_000;

/// Top-level lists longer than this trigger the capped first attempt.
const ESCALATION_THRESHOLD: usize = 32;

/// Generator matrices rewritten into the reduced coordinates given by
/// `reduced = u · original`, flattened to i64 rows.
fn gens_in_reduced_coords(group: &IsometryGroup, u: &IntMatrix) -> Result<Vec<Vec<i64>>> {
    let n = u.rows();
    let uinv = u.inverse_unimodular()?;
    let mut out = Vec::with_capacity(group.generators().len());
    for iso in group.generators() {
        let m = u.mul(iso.matrix()).mul(&uinv);
        let mut flat = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                flat.push(
                    m.at(i, j)
                        .to_i64()
                        .ok_or_else(|| Error::Input("generator entry exceeds i64".into()))?,
                );
            }
        }
        out.push(flat);
    }
    Ok(out)
}

/// One representative per orbit of the pool under the given target
/// automorphisms, in pool order. Valid only for the first search position:
/// composing a witness with a target automorphism moves its first image
/// anywhere in the orbit, so one candidate per orbit decides completability.
fn level1_orbit_reps(pool: &[u32], set: &VecSet, gens: &[Vec<i64>]) -> Vec<u32> {
    let n = set.n;
    let mut seen: std::collections::HashSet<u32> = std::collections::HashSet::new();
    let mut reps = Vec::new();
    for &t in pool {
        if seen.contains(&t) {
            continue;
        }
        reps.push(t);
        seen.insert(t);
        let mut queue = vec![t];
        while let Some(x) = queue.pop() {
            for g in gens {
                let y = vec_mul_i64(set.vec(x), g, n);
                if let Some(&yi) = set.index_of.get(&y) {
                    if seen.insert(yi) {
                        queue.push(yi);
                    }
                }
            }
        }
    }
    reps
}

/// Decide isometry and produce a witness m with m·gram(b)·mᵀ = gram(a).
/// Prescreens determinant and the scaled norm histograms of the short-vector
/// sets, then runs an exhaustive backtracking search.
pub fn is_isometric(a: &Lattice, b: &Lattice, opts: &EnumOptions) -> Result<Option<Isometry>> {
    is_isometric_with_symmetry(a, b, None, opts)
}

/// Like `is_isometric`, with known symmetry used to prune the search: when
/// `sym` is a group of automorphisms of whichever side becomes the search
/// target, first-position candidates collapse to orbit representatives.
/// Without it, a large search first runs under a node cap and, if that runs
/// out, computes the target's automorphism group itself before retrying.
pub fn is_isometric_with_symmetry(
    a: &Lattice,
    b: &Lattice,
    sym: Option<&IsometryGroup>,
    opts: &EnumOptions,
) -> Result<Option<Isometry>> {
    if a.rank() != b.rank() {
        return Ok(None);
    }
    let n = a.rank();
    if n == 0 {
        return Ok(Some(Isometry::identity(0)));
    }
    if a.determinant() != b.determinant() {
        return Ok(None);
    }
    let (ra, ua) = lll_reduce(a, &default_delta())?;
    let (rb, ub) = lll_reduce(b, &default_delta())?;
    let diag_max = |l: &Lattice| {
        (0..n)
            .map(|i| l.gram().at(i, i))
            .max()
            .expect("positive rank")
            .clone()
    };
    // Search maps the side with the smaller reduced diagonal into the other:
    // its basis images need only the shorter vectors of the target.
    let swap = diag_max(&rb) < diag_max(&ra);
    let (src, usrc, tgt, utgt, tgt_orig) = if swap {
        (&rb, &ub, &ra, &ua, a)
    } else {
        (&ra, &ua, &rb, &ub, b)
    };
    let scale = src.gram().denominator().lcm(&tgt.gram().denominator());
    let bound = diag_max(src);
    let sset = VecSet::build(src, &bound, &scale, opts)?;
    let tset = VecSet::build(tgt, &bound, &scale, opts)?;
    if sset.histogram() != tset.histogram() {
        return Ok(None);
    }
    let srows: Vec<u32> = (0..n)
        .map(|j| {
            let mut e = vec![0i64; n];
            e[j] = 1;
            *sset
                .index_of
                .get(&e)
                .expect("reduced basis vectors lie within their own diagonal bound")
        })
        .collect();
    let sgram = frame_gram(&sset, &srows);
    let (ord, _) = greedy_order(&sset, &srows, &sgram);
    let mut ctx = SearchCtx {
        tgt: &tset,
        n,
        sgram,
        ord,
        cinv: None,
        nodes: 0,
        budget: opts.budget,
    };
    let mut lists = match ctx.lists_after_prefix(&[]) {
        None => return Ok(None),
        Some(l) => l,
    };
    // Negation is an automorphism of every lattice, so the first position
    // never needs both signs of a candidate.
    let mut tgt_gens = vec![neg_identity_i64(n)];
    let mut have_sym = false;
    if let Some(g) = sym {
        if g.lattice().same_lattice(tgt_orig) {
            tgt_gens.extend(gens_in_reduced_coords(g, utgt)?);
            have_sym = true;
        }
    }
    lists[0] = level1_orbit_reps(&lists[0], &tset, &tgt_gens);
    let escalate =
        !have_sym && lists[0].len() > ESCALATION_THRESHOLD && opts.budget > FIRST_ATTEMPT_CAP;
    if escalate {
        ctx.budget = FIRST_ATTEMPT_CAP;
    }
    let first = {
        let mut chosen = Vec::new();
        ctx.search(&mut chosen, &lists)
    };
    let hit = match first {
        Ok(h) => h,
        Err(Error::BudgetExhausted { .. }) if escalate => {
            let tsym = automorphism_group(tgt, None, opts)?;
            tgt_gens.extend(gens_in_reduced_coords(&tsym, &IntMatrix::identity(n))?);
            lists[0] = level1_orbit_reps(&lists[0], &tset, &tgt_gens);
            ctx.nodes = 0;
            ctx.budget = opts.budget;
            let mut chosen = Vec::new();
            ctx.search(&mut chosen, &lists)?
        }
        Err(e) => return Err(e),
    };
    let t_red = match hit {
        None => return Ok(None),
        Some(t) => IntMatrix::from_i64(n, n, &t),
    };
    // Undo the reductions: reduced = u · original on both sides.
    let t = usrc.inverse_unimodular()?.mul(&t_red).mul(utgt);
    let witness = if swap {
        Isometry::witness(a, b, t.inverse_unimodular()?)?
    } else {
        Isometry::witness(a, b, t)?
    };
    Ok(Some(witness))
}

/// The action of a group of automorphisms on the discriminant group of its
/// lattice, tabulated on the discriminant generators.
#[derive(Clone, Debug)]
pub struct DiscriminantAction {
    d: DiscriminantGroup,
    group_order: BigInt,
    gens: Vec<Isometry>,
    /// gen_images[g][k] = class coordinates of the image of generator k.
    gen_images: Vec<Vec<Vec<BigInt>>>,
}

pub fn induced_discriminant_action(
    g: &IsometryGroup,
    d: &DiscriminantGroup,
) -> Result<DiscriminantAction> {
    if !d.parent().same_lattice(g.lattice()) {
        return Err(Error::Input(
            "discriminant group belongs to a different lattice".into(),
        ));
    }
    let l = d.parent();
    let mut gen_images = Vec::with_capacity(g.generators().len());
    for iso in g.generators() {
        let mut images = Vec::with_capacity(d.num_factors());
        for gen_vec in d.generators() {
            let coords = l
                .coords_of(gen_vec)
                .ok_or_else(|| Error::NotIsometry("generator image leaves the span".into()))?;
            let image_coords = iso.apply_coords(&coords);
            let ambient = l.vector_from_coords(&image_coords);
            let class = d
                .class_coords(&ambient)
                .map_err(|_| Error::NotIsometry("generator image leaves the dual lattice".into()))?;
            images.push(class);
        }
        gen_images.push(images);
    }
    Ok(DiscriminantAction {
        d: d.clone(),
        group_order: g.order().clone(),
        gens: g.generators().to_vec(),
        gen_images,
    })
}

impl DiscriminantAction {
    pub fn discriminant(&self) -> &DiscriminantGroup {
        &self.d
    }

    pub fn group_order(&self) -> &BigInt {
        &self.group_order
    }

    pub fn num_generators(&self) -> usize {
        self.gens.len()
    }

    /// Image of a class under one generator; additive extension of the
    /// tabulated generator images.
    pub fn apply(&self, gen: usize, class: &[BigInt]) -> Vec<BigInt> {
        let mut out = vec![BigInt::zero(); self.d.num_factors()];
        for (k, c) in class.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            out = self.d.add(&out, &self.d.scale(c, &self.gen_images[gen][k]));
        }
        out
    }

    /// Image of a class under an arbitrary group element, via an ambient
    /// representative.
    pub fn apply_isometry(&self, iso: &Isometry, class: &[BigInt]) -> Result<Vec<BigInt>> {
        let l = self.d.parent();
        let rep = self.d.representative(class);
        let coords = l
            .coords_of(&rep)
            .ok_or_else(|| Error::Input("representative leaves the span".into()))?;
        let ambient = l.vector_from_coords(&iso.apply_coords(&coords));
        self.d.class_coords(&ambient)
    }

    /// Orbit of one class, sorted ascending.
    pub fn orbit(&self, start: &[BigInt]) -> Vec<Vec<BigInt>> {
        let mut seen: Vec<Vec<BigInt>> = vec![start.to_vec()];
        let mut queue: VecDeque<Vec<BigInt>> = VecDeque::new();
        queue.push_back(start.to_vec());
        while let Some(x) = queue.pop_front() {
            for gi in 0..self.gens.len() {
                let y = self.apply(gi, &x);
                if !seen.contains(&y) {
                    seen.push(y.clone());
                    queue.push_back(y);
                }
            }
        }
        seen.sort();
        seen
    }

    /// Partition of the given classes into orbits. Each orbit is sorted
    /// ascending; orbits are ordered by their least element, which serves as
    /// the canonical representative.
    pub fn orbits(&self, points: &[Vec<BigInt>]) -> Vec<Vec<Vec<BigInt>>> {
        orbits_by(points, |p| {
            (0..self.gens.len()).map(|gi| self.apply(gi, p)).collect()
        })
    }

    /// Stabilizer of a class: Schreier generators over the orbit transversal,
    /// order |G| / |orbit|.
    pub fn stabilizer(&self, point: &[BigInt]) -> Result<IsometryGroup> {
        let n = self.d.parent().rank();
        let mut orbit_order: Vec<Vec<BigInt>> = vec![point.to_vec()];
        let mut transversal: HashMap<Vec<BigInt>, Isometry> = HashMap::new();
        transversal.insert(point.to_vec(), Isometry::identity(n));
        let mut head = 0;
        while head < orbit_order.len() {
            let x = orbit_order[head].clone();
            head += 1;
            let tx = transversal[&x].clone();
            for (gi, gen) in self.gens.iter().enumerate() {
                let y = self.apply(gi, &x);
                if !transversal.contains_key(&y) {
                    transversal.insert(y.clone(), tx.compose(gen));
                    orbit_order.push(y);
                }
            }
        }
        let orbit_len = BigInt::from(orbit_order.len());
        let (q, r) = self.group_order.div_rem(&orbit_len);
        if !r.is_zero() {
            return Err(Error::Verification(
                "orbit size does not divide the group order".into(),
            ));
        }
        let mut gens: Vec<IntMatrix> = Vec::new();
        for x in &orbit_order {
            let tx = &transversal[x];
            for (gi, gen) in self.gens.iter().enumerate() {
                let y = self.apply(gi, x);
                let ty_inv = transversal[&y].inverse()?;
                let s = tx.compose(gen).compose(&ty_inv);
                if !s.is_identity() && !gens.contains(s.matrix()) {
                    gens.push(s.matrix().clone());
                }
            }
        }
        IsometryGroup::new(self.d.parent().clone(), gens, q)
    }
}

/// Partition points into orbits under the closure of `images`, which maps a
/// point to its images under every generator. Each orbit is sorted ascending
/// and orbits are ordered by their least element.
pub fn orbits_by<P, F>(points: &[P], images: F) -> Vec<Vec<P>>
where
    P: Clone + Eq + std::hash::Hash + Ord,
    F: Fn(&P) -> Vec<P>,
{
    let mut seen: std::collections::HashSet<P> = std::collections::HashSet::new();
    let mut orbits = Vec::new();
    for p in points {
        if seen.contains(p) {
            continue;
        }
        let mut orbit = vec![p.clone()];
        seen.insert(p.clone());
        let mut queue: VecDeque<P> = VecDeque::new();
        queue.push_back(p.clone());
        while let Some(x) = queue.pop_front() {
            for y in images(&x) {
                if seen.insert(y.clone()) {
                    orbit.push(y.clone());
                    queue.push_back(y);
                }
            }
        }
        orbit.sort();
        orbits.push(orbit);
    }
    orbits.sort_by(|a, b| a[0].cmp(&b[0]));
    orbits
}

/// The sublattice generated by all (s − 1)·v for generators s and basis
/// vectors v. Errors on the zero lattice (trivial generator set) and on
/// matrices that are not isometries of `l`.
pub fn group_difference_sublattice(l: &Lattice, gens: &[Isometry]) -> Result<Lattice> {
    let n = l.rank();
    let mut rows: Vec<Vec<Rational>> = Vec::new();
    for iso in gens {
        Isometry::automorphism(l, iso.matrix().clone())?;
        let diff = iso.matrix().to_rat().add(&IntMatrix::identity(n).to_rat().scale(&-Rational::one()));
        let moved = diff.mul(l.basis());
        for i in 0..n {
            rows.push(moved.row_vec(i));
        }
    }
    if rows.is_empty() {
        return Err(Error::Input(
            "difference sublattice of an empty generator set is zero".into(),
        ));
    }
    let stacked = RatMatrix::from_rows(rows);
    let basis = crate::lattice::canonical_row_basis(&stacked);
    if basis.rows() == 0 {
        return Err(Error::Input(
            "difference sublattice is the zero lattice".into(),
        ));
    }
    Lattice::new(l.ambient_form().clone(), basis, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disc::discriminant_group;
    use crate::lattice::Lattice;
    use crate::mat::RatMatrix;
    use crate::rat::{rat, rat_i};
    use crate::stdlat::{an, d16_plus, dn, e8, e8_e8};

    fn opts() -> EnumOptions {
        EnumOptions::default()
    }

    /// Independent oracle: count all integer matrices with rows drawn from
    /// the short-vector set that preserve the gram matrix exactly.
    fn brute_force_aut_order(l: &Lattice) -> u64 {
        let n = l.rank();
        let bound = (0..n).map(|i| l.gram().at(i, i)).max().unwrap().clone();
        let report = enumerate_short(l, &bound, &opts()).unwrap();
        let mut vecs: Vec<Vec<BigInt>> = Vec::new();
        for (x, _) in &report.vectors {
            vecs.push(x.clone());
            vecs.push(x.iter().map(|c| -c).collect());
        }
        let gram = l.gram();
        let inner = |x: &[BigInt], y: &[BigInt]| -> Rational {
            let mut acc = Rational::zero();
            for i in 0..n {
                for j in 0..n {
                    if !x[i].is_zero() && !y[j].is_zero() {
                        acc += Rational::from_integer(&x[i] * &y[j]) * gram.at(i, j);
                    }
                }
            }
            acc
        };
        fn extend(
            rows: &mut Vec<Vec<BigInt>>,
            vecs: &[Vec<BigInt>],
            gram: &RatMatrix,
            inner: &dyn Fn(&[BigInt], &[BigInt]) -> Rational,
            count: &mut u64,
        ) {
            let k = rows.len();
            if k == gram.rows() {
                *count += 1;
                return;
            }
            for v in vecs {
                if inner(v, v) != *gram.at(k, k) {
                    continue;
                }
                if (0..k).any(|j| inner(v, &rows[j]) != *gram.at(k, j)) {
                    continue;
                }
                rows.push(v.clone());
                extend(rows, vecs, gram, inner, count);
                rows.pop();
            }
        }
        let mut count = 0;
        extend(&mut Vec::new(), &vecs, gram, &inner, &mut count);
        count
    }

    #[test]
    fn z2_square_symmetries() {
        let l = Lattice::zn(2);
        let g = automorphism_group(&l, None, &opts()).unwrap();
        assert_eq!(g.order(), &BigInt::from(8));
        assert_eq!(brute_force_aut_order(&l), 8);
    }

    #[test]
    fn a2_hexagon_symmetries() {
        let l = an(2);
        let g = automorphism_group(&l, None, &opts()).unwrap();
        assert_eq!(g.order(), &BigInt::from(12));
        assert_eq!(brute_force_aut_order(&l), 12);
    }

    #[test]
    fn d4_triality_order() {
        let l = dn(4);
        let g = automorphism_group(&l, None, &opts()).unwrap();
        assert_eq!(g.order(), &BigInt::from(1152));
        assert_eq!(brute_force_aut_order(&l), 1152);
    }

    #[test]
    fn a4_order_and_class_orbits() {
        let l = an(4);
        let g = automorphism_group(&l, None, &opts()).unwrap();
        assert_eq!(g.order(), &BigInt::from(240));
        let d = discriminant_group(&l).unwrap();
        let act = induced_discriminant_action(&g, &d).unwrap();
        // The discriminant form only admits the units ±1, so the four
        // nonzero classes fall into the two orbits {1,4} and {2,3}.
        let nonzero: Vec<Vec<BigInt>> = d.all_classes().into_iter().skip(1).collect();
        let orbits = act.orbits(&nonzero);
        assert_eq!(orbits.len(), 2);
        assert_eq!(
            orbits[0],
            vec![vec![BigInt::from(1)], vec![BigInt::from(4)]]
        );
        assert_eq!(
            orbits[1],
            vec![vec![BigInt::from(2)], vec![BigInt::from(3)]]
        );
        // Orbit-stabilizer: |orbit| * |stab| = |G|.
        let stab = act.stabilizer(&[BigInt::from(1)]).unwrap();
        assert_eq!(stab.order() * BigInt::from(2), *g.order());
        for s in stab.generators() {
            let img = act.apply_isometry(s, &[BigInt::from(1)]).unwrap();
            assert_eq!(img, vec![BigInt::from(1)]);
        }
    }

    #[test]
    fn e8_order_with_root_orbit_crosscheck() {
        let l = e8();
        let g = automorphism_group(&l, None, &opts()).unwrap();
        assert_eq!(g.order(), &BigInt::from(696729600u64));
        // Close the orbit of one basis vector under the returned generators:
        // the 240 roots form a single orbit and its size divides the order.
        let n = l.rank();
        let mut e0 = vec![BigInt::zero(); n];
        e0[0] = BigInt::one();
        let orbits = orbits_by(&[e0], |x: &Vec<BigInt>| {
            g.generators()
                .iter()
                .map(|iso| {
                    (0..n)
                        .map(|j| {
                            let mut acc = BigInt::zero();
                            for k in 0..n {
                                acc += &x[k] * iso.matrix().at(k, j);
                            }
                            acc
                        })
                        .collect()
                })
                .collect()
        });
        assert_eq!(orbits[0].len(), 240);
        assert!((g.order() % BigInt::from(240)).is_zero());
    }

    #[test]
    fn order_invariant_under_basis_change() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        for seed in 0..5u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let l = an(3);
            let base = automorphism_group(&l, None, &opts()).unwrap().order().clone();
            let mut t = IntMatrix::identity(3);
            for _ in 0..20 {
                let a = rng.gen_range(0..3);
                let b = rng.gen_range(0..3);
                if a != b {
                    t.add_row_multiple(a, b, &BigInt::from(rng.gen_range(-2..3i64)));
                }
            }
            let scrambled = Lattice::new(
                l.ambient_form().clone(),
                t.to_rat().mul(l.basis()),
                None,
            )
            .unwrap();
            let g = automorphism_group(&scrambled, None, &opts()).unwrap();
            assert_eq!(g.order(), &base);
        }
    }

    #[test]
    fn generators_preserve_gram() {
        let l = dn(4);
        let g = automorphism_group(&l, None, &opts()).unwrap();
        for iso in g.generators() {
            let m = iso.matrix().to_rat();
            assert_eq!(m.mul(l.gram()).mul(&m.transpose()), *l.gram());
        }
    }

    #[test]
    fn spanning_failure_on_small_depth() {
        let l = an(2);
        let err = automorphism_group(&l, Some(&rat(1, 1)), &opts()).unwrap_err();
        assert!(matches!(err, Error::SpanningFailure));
    }

    #[test]
    fn budget_exhaustion_propagates() {
        let l = e8();
        let err = automorphism_group(&l, None, &EnumOptions { budget: 10 }).unwrap_err();
        assert!(matches!(err, Error::BudgetExhausted { .. }));
    }

    #[test]
    fn isometric_to_scrambled_self() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        for seed in 0..20u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let dim = 2 + (seed % 3) as usize;
            let l = if dim == 2 { an(2) } else if dim == 3 { an(3) } else { dn(4) };
            let mut t = IntMatrix::identity(dim);
            for _ in 0..15 {
                let a = rng.gen_range(0..dim);
                let b = rng.gen_range(0..dim);
                if a != b {
                    t.add_row_multiple(a, b, &BigInt::from(rng.gen_range(-2..3i64)));
                }
            }
            let m = Lattice::new(l.ambient_form().clone(), t.to_rat().mul(l.basis()), None).unwrap();
            let w = is_isometric(&l, &m, &opts()).unwrap().expect("same lattice");
            // Witness verified by construction; also check symmetry.
            assert!(is_isometric(&m, &l, &opts()).unwrap().is_some());
            let _ = w;
        }
    }

    #[test]
    fn a2_is_three_modular() {
        let a2 = an(2);
        let rescaled_dual = a2.dual().rescale(&rat_i(3)).unwrap();
        let w = is_isometric(&a2, &rescaled_dual, &opts()).unwrap();
        assert!(w.is_some());
        // A4 against sqrt5 times its dual fails already on determinants.
        let a4 = an(4);
        let rd = a4.dual().rescale(&rat_i(5)).unwrap();
        assert_ne!(a4.determinant(), rd.determinant());
        assert!(is_isometric(&a4, &rd, &opts()).unwrap().is_none());
    }

    #[test]
    fn dimension_sixteen_pair_is_not_isometric() {
        let a = e8_e8();
        let b = d16_plus();
        assert!(is_isometric(&a, &a, &opts()).unwrap().is_some());
        // Self-contained path: the capped first attempt runs out and the
        // search escalates to computing the target's automorphisms.
        assert!(is_isometric(&a, &b, &opts()).unwrap().is_none());
        // With the symmetry precomputed both directions decide quickly.
        // The target side is the one with the larger reduced diagonal.
        let aut_b = automorphism_group(&b, None, &opts()).unwrap();
        let w_e8: BigInt = BigInt::from(696729600u64);
        let factorial16: BigInt = (1..=16u64).map(BigInt::from).product();
        assert_eq!(aut_b.order(), &(BigInt::from(1u64 << 15) * factorial16));
        assert!(is_isometric_with_symmetry(&a, &b, Some(&aut_b), &opts())
            .unwrap()
            .is_none());
        assert!(is_isometric_with_symmetry(&b, &a, Some(&aut_b), &opts())
            .unwrap()
            .is_none());
        let aut_a = automorphism_group(&a, None, &opts()).unwrap();
        assert_eq!(aut_a.order(), &(&w_e8 * &w_e8 * BigInt::from(2)));
    }

    #[test]
    fn negation_action_on_a4_classes() {
        let l = an(4);
        let neg = IntMatrix::from_i64(
            4,
            4,
            &[-1, 0, 0, 0, 0, -1, 0, 0, 0, 0, -1, 0, 0, 0, 0, -1],
        );
        let g = IsometryGroup::new(l.clone(), vec![neg], BigInt::from(2)).unwrap();
        let d = discriminant_group(&l).unwrap();
        let act = induced_discriminant_action(&g, &d).unwrap();
        let nonzero: Vec<Vec<BigInt>> = d.all_classes().into_iter().skip(1).collect();
        let orbits = act.orbits(&nonzero);
        assert_eq!(orbits.len(), 2);
        assert_eq!(orbits[0].len(), 2);
        assert_eq!(orbits[1].len(), 2);
    }

    #[test]
    fn trivial_discriminant_trivial_action() {
        let l = e8();
        let g = IsometryGroup::new(
            l.clone(),
            vec![IntMatrix::identity(8)],
            BigInt::one(),
        );
        // Identity generator is dropped at validation? No: kept, simply acts
        // trivially on the trivial group.
        let g = g.unwrap();
        let d = discriminant_group(&l).unwrap();
        let act = induced_discriminant_action(&g, &d).unwrap();
        assert_eq!(act.discriminant().num_factors(), 0);
        assert_eq!(act.orbits(&d.all_classes()).len(), 1);
    }

    #[test]
    fn action_respects_composition() {
        let l = an(4);
        let g = automorphism_group(&l, None, &opts()).unwrap();
        let d = discriminant_group(&l).unwrap();
        let act = induced_discriminant_action(&g, &d).unwrap();
        let a = &g.generators()[0];
        let b = &g.generators()[g.generators().len() - 1];
        let ab = a.compose(b);
        for c in d.all_classes() {
            let direct = act.apply_isometry(&ab, &c).unwrap();
            let staged = act
                .apply_isometry(b, &act.apply_isometry(a, &c).unwrap())
                .unwrap();
            assert_eq!(direct, staged);
        }
    }

    #[test]
    fn difference_sublattice_cases() {
        // S = {-1} on Z^3: differences span 2 Z^3, index 8.
        let z3 = Lattice::zn(3);
        let neg = Isometry::automorphism(
            &z3,
            IntMatrix::from_i64(3, 3, &[-1, 0, 0, 0, -1, 0, 0, 0, -1]),
        )
        .unwrap();
        let m = group_difference_sublattice(&z3, &[neg]).unwrap();
        assert_eq!(m.rank(), 3);
        assert_eq!(m.index_in(&z3), Some(BigInt::from(8)));
        // Coordinate swap on Z^2: rank drops to 1, generated by (1, -1).
        let z2 = Lattice::zn(2);
        let swap = Isometry::automorphism(&z2, IntMatrix::from_i64(2, 2, &[0, 1, 1, 0])).unwrap();
        let m = group_difference_sublattice(&z2, &[swap]).unwrap();
        assert_eq!(m.rank(), 1);
        assert_eq!(m.gram().at(0, 0), &rat_i(2));
        // Empty generator set is flagged.
        assert!(group_difference_sublattice(&z2, &[]).is_err());
    }

    #[test]
    fn sum_lattice_group_includes_factor_swap() {
        let l = an(4).orthogonal_sum(&an(4));
        let g = automorphism_group(&l, None, &opts()).unwrap();
        // Wreath product: |Aut(A4)|^2 * 2.
        assert_eq!(g.order(), &(BigInt::from(240u64 * 240 * 2)));
    }
}
