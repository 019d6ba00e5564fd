//! Backtracking search for even unimodular overlattices of an orthogonal
//! sum A ⊥ B with p-elementary glue.
//!
//! Every even unimodular overlattice of A ⊥ B whose glue projects
//! injectively to A#/A is the lattice of a graph code {(x, φx)} for an
//! anti-isometry φ of the discriminant forms. The search fixes a frame of
//! classes b̄_1, …, b̄_s on the A side together with its exact Gram matrix
//! F, enumerates anchor classes c̄_1 (and c̄_2 when s ≥ 2) on the B side up
//! to the supplied symmetry, filters candidate vectors per depth, and
//! extends depth first. A partial lattice is pruned as soon as it is not
//! integral, cannot reach index p^s over A ⊥ B, or contains a nonzero
//! vector of norm below the target minimum. Completed lattices are
//! re-verified from scratch and deduplicated into Aut(A ⊥ B)-orbits.

use std::collections::{HashMap, HashSet, VecDeque};
use std::path::Path;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::disc::{discriminant_group, DiscriminantGroup};
use crate::enumerate::{
    coset_minimum, coset_short_vectors, has_vector_below, kissing_number, minimum, EnumOptions,
};
use crate::error::{Error, Result};
use crate::glue::{is_prime_u64, subspaces};
use crate::isom::{automorphism_group, is_isometric, Isometry};
use crate::lattice::{lattice_sum_vectors, AmbientVector, Lattice};
use crate::mat::RatMatrix;
use crate::rat::{mod_one, rat_i, Rational};

/// How the first anchor class is chosen within each anchor subspace.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pinning {
    /// Try one representative of every symmetry orbit of eligible classes.
    /// Always complete.
    TryAll,
    /// Pin the first anchor to the single first orbit representative. Only
    /// complete when the symmetry acts transitively on the eligible classes
    /// of the subspace; the caller asserts that.
    PinFirst,
}

/// A glue-search instance: the two summands, the fixed frame of classes on
/// the A side with its exact Gram matrix, and the search policy knobs.
#[derive(Clone)]
pub struct SearchConfig {
    left: Lattice,
    right: Lattice,
    p: u64,
    glue_rank: usize,
    target_min: Rational,
    frame: Vec<AmbientVector>,
    frame_gram: RatMatrix,
    pinning: Pinning,
    right_symmetry: Vec<Isometry>,
    compute_stabilizers: bool,
    reorder_smallest_first: bool,
    require_extremal: bool,
    jobs: usize,
    opts: EnumOptions,
}

impl SearchConfig {
    /// Validates the instance data. The frame vectors must lie in the dual
    /// of `left`, realize `frame_gram` exactly, achieve their coset minima,
    /// and represent independent classes of the discriminant group; the
    /// congruence rows of the frame must be constant mod Z past each anchor
    /// index so that a single candidate pool serves every depth.
    pub fn new(
        left: Lattice,
        right: Lattice,
        p: u64,
        glue_rank: usize,
        target_min: Rational,
        frame: Vec<AmbientVector>,
        frame_gram: RatMatrix,
    ) -> Result<SearchConfig> {
        if !is_prime_u64(p) {
            return Err(Error::Input(format!("glue exponent {p} is not prime")));
        }
        if glue_rank == 0 {
            return Err(Error::Input("glue rank must be positive".into()));
        }
        if left.rank() + right.rank() == 0 {
            return Err(Error::Input("both summands are zero lattices".into()));
        }
        if !target_min.is_positive() {
            return Err(Error::Input("target minimum must be positive".into()));
        }
        for l in [&left, &right] {
            if !l.is_integral() || !l.is_even() {
                return Err(Error::Input("summands must be even integral lattices".into()));
            }
        }
        if frame.len() != glue_rank {
            return Err(Error::Input(format!(
                "frame has {} vectors, glue rank is {glue_rank}",
                frame.len()
            )));
        }
        if frame_gram.rows() != glue_rank || frame_gram.cols() != glue_rank {
            return Err(Error::Input("frame Gram matrix has wrong shape".into()));
        }
        let ldual = left.dual();
        for v in &frame {
            if v.len() != left.ambient_dim() {
                return Err(Error::Dimension("frame vector has wrong length".into()));
            }
            if !ldual.contains(v) {
                return Err(Error::Input("frame vector is not in the dual of the left summand".into()));
            }
        }
        for i in 0..glue_rank {
            for j in 0..glue_rank {
                if left.inner(&frame[i], &frame[j]) != *frame_gram.at(i, j) {
                    return Err(Error::Input(
                        "declared frame Gram does not match the frame vectors".into(),
                    ));
                }
            }
        }
        // The diagonal fixes the candidate norm residue; it must be uniform,
        // and each congruence row must be constant mod Z past its own index.
        for i in 1..glue_rank {
            let d = (frame_gram.at(i, i) - frame_gram.at(0, 0)) / rat_i(2);
            if !d.is_integer() {
                return Err(Error::Input(
                    "frame diagonal entries must agree mod 2Z".into(),
                ));
            }
        }
        let t = anchor_count(glue_rank);
        for a in 0..t {
            let mut residue: Option<Rational> = None;
            for i in (a + 1)..glue_rank {
                let r = mod_one(frame_gram.at(a, i));
                match &residue {
                    None => residue = Some(r),
                    Some(prev) => {
                        if *prev != r {
                            return Err(Error::Input(format!(
                                "frame congruence row {a} is not constant mod Z past the anchors"
                            )));
                        }
                    }
                }
            }
        }
        let pb = BigInt::from(p);
        if left.rank() > 0 {
            let da = discriminant_group(&left)?;
            if !da.is_elementary(&pb) {
                return Err(Error::Input(format!(
                    "left discriminant group is not {p}-elementary"
                )));
            }
            // Frame classes must be independent so the glue has rank s.
            let mut rows = Vec::with_capacity(glue_rank);
            for v in &frame {
                rows.push(coords_to_u64(&da.class_coords(v)?)?);
            }
            let rank = rref_mod_p(rows, p).len();
            if rank != glue_rank {
                return Err(Error::Input(
                    "frame classes are dependent in the discriminant group".into(),
                ));
            }
        } else {
            // Degenerate left summand: the search reduces to pure right-side
            // overlattices ⟨B, c_1, …, c_s⟩ and the frame is all zeros.
            for v in &frame {
                if !v.is_empty() {
                    return Err(Error::Dimension("frame vector has wrong length".into()));
                }
            }
        }
        if right.rank() > 0 {
            let db = discriminant_group(&right)?;
            if !db.is_elementary(&pb) {
                return Err(Error::Input(format!(
                    "right discriminant group is not {p}-elementary"
                )));
            }
            if left.rank() > 0 && db.num_factors() < glue_rank {
                return Err(Error::Input(
                    "right discriminant group has rank below the glue rank".into(),
                ));
            }
        }
        Ok(SearchConfig {
            left,
            right,
            p,
            glue_rank,
            target_min,
            frame,
            frame_gram,
            pinning: Pinning::TryAll,
            right_symmetry: Vec::new(),
            compute_stabilizers: true,
            reorder_smallest_first: false,
            require_extremal: false,
            jobs: 1,
            opts: EnumOptions::default(),
        })
    }

    pub fn with_pinning(mut self, pinning: Pinning) -> SearchConfig {
        self.pinning = pinning;
        self
    }

    /// Automorphisms of the right summand whose discriminant action prunes
    /// anchor choices. Negation is always included implicitly.
    pub fn with_right_symmetry(mut self, gens: Vec<Isometry>) -> Result<SearchConfig> {
        for g in &gens {
            // Revalidates the gram relation against this instance's summand.
            Isometry::automorphism(&self.right, g.matrix().clone())?;
        }
        self.right_symmetry = gens;
        Ok(self)
    }

    /// When disabled, orbit fusion of completed lattices falls back to
    /// pairwise isometry tests and no stabilizer orders are reported.
    pub fn with_stabilizers(mut self, on: bool) -> SearchConfig {
        self.compute_stabilizers = on;
        self
    }

    /// Process the smallest candidate list first instead of ascending frame
    /// order.
    pub fn with_reorder_smallest_first(mut self, on: bool) -> SearchConfig {
        self.reorder_smallest_first = on;
        self
    }

    /// Require the target minimum to reach the extremal bound for the total
    /// dimension.
    pub fn with_require_extremal(mut self, on: bool) -> Result<SearchConfig> {
        if on {
            let n = self.left.rank() + self.right.rank();
            let bound = rat_i(crate::lattice::extremal_bound(n) as i64);
            if self.target_min < bound {
                return Err(Error::Input(format!(
                    "target minimum is below the extremal bound {bound} for dimension {n}"
                )));
            }
        }
        self.require_extremal = on;
        Ok(self)
    }

    pub fn with_jobs(mut self, jobs: usize) -> SearchConfig {
        self.jobs = jobs.max(1);
        self
    }

    pub fn with_options(mut self, opts: EnumOptions) -> SearchConfig {
        self.opts = opts;
        self
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

    pub fn glue_rank(&self) -> usize {
        self.glue_rank
    }

    pub fn target_min(&self) -> &Rational {
        &self.target_min
    }

    pub fn frame(&self) -> &[AmbientVector] {
        &self.frame
    }

    pub fn frame_gram(&self) -> &RatMatrix {
        &self.frame_gram
    }

    /// Canonical digest of the instance data (summands, frame, target,
    /// policy). Budgets and parallel width are excluded so a run may be
    /// resumed with more resources.
    pub fn digest(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        let feed_mat = |h: &mut Sha256, m: &RatMatrix| {
            let (im, den) = m.clear_denominators();
            h.update(format!("{}x{}/{}:", m.rows(), m.cols(), den));
            for i in 0..im.rows() {
                for j in 0..im.cols() {
                    h.update(format!("{},", im.at(i, j)));
                }
            }
        };
        for l in [&self.left, &self.right] {
            feed_mat(&mut h, l.ambient_form());
            feed_mat(&mut h, &l.canonical_basis());
        }
        h.update(format!(
            "p={};s={};target={};pin={:?};reorder={};",
            self.p, self.glue_rank, self.target_min, self.pinning, self.reorder_smallest_first
        ));
        for v in &self.frame {
            for x in v {
                h.update(format!("{x},"));
            }
            h.update(";");
        }
        feed_mat(&mut h, &self.frame_gram);
        for g in &self.right_symmetry {
            let m = g.matrix();
            for i in 0..m.rows() {
                for j in 0..m.cols() {
                    h.update(format!("{},", m.at(i, j)));
                }
            }
            h.update(";");
        }
        hex::encode(h.finalize())
    }
}

fn anchor_count(glue_rank: usize) -> usize {
    glue_rank.min(2)
}

fn coords_to_u64(coords: &[BigInt]) -> Result<Vec<u64>> {
    coords
        .iter()
        .map(|c| {
            c.to_u64()
                .ok_or_else(|| Error::Input("class coordinate out of range".into()))
        })
        .collect()
}

fn coords_to_big(coords: &[u64]) -> Vec<BigInt> {
    coords.iter().map(|&c| BigInt::from(c)).collect()
}

// ---------------------------------------------------------------------------
// Mod-p linear algebra on discriminant coordinates.

fn rref_mod_p(rows: Vec<Vec<u64>>, p: u64) -> Vec<Vec<u64>> {
    let mut m: Vec<Vec<u64>> = rows.into_iter().map(|r| r.iter().map(|x| x % p).collect()).collect();
    if m.is_empty() {
        return m;
    }
    let cols = m[0].len();
    let mut pivot_row = 0;
    for col in 0..cols {
        let Some(sel) = (pivot_row..m.len()).find(|&r| m[r][col] % p != 0) else {
            continue;
        };
        m.swap(pivot_row, sel);
        let inv = mod_inverse(m[pivot_row][col], p);
        for x in m[pivot_row].iter_mut() {
            *x = *x * inv % p;
        }
        for r in 0..m.len() {
            if r != pivot_row && m[r][col] != 0 {
                let f = m[r][col];
                for c in 0..cols {
                    let sub = f * m[pivot_row][c] % p;
                    m[r][c] = (m[r][c] + p - sub) % p;
                }
            }
        }
        pivot_row += 1;
        if pivot_row == m.len() {
            break;
        }
    }
    m.truncate(pivot_row);
    m
}

fn mod_inverse(a: u64, p: u64) -> u64 {
    // p is prime and a nonzero mod p.
    let mut result = 1u64;
    let mut base = a % p;
    let mut exp = p - 2;
    while exp > 0 {
        if exp & 1 == 1 {
            result = result * base % p;
        }
        base = base * base % p;
        exp >>= 1;
    }
    result
}

type ActionMatrix = Vec<Vec<u64>>;

fn mat_mul_mod(a: &ActionMatrix, b: &ActionMatrix, p: u64) -> ActionMatrix {
    let r = a.len();
    let mut out = vec![vec![0u64; r]; r];
    for i in 0..r {
        for k in 0..r {
            if a[i][k] == 0 {
                continue;
            }
            for j in 0..r {
                out[i][j] = (out[i][j] + a[i][k] * b[k][j]) % p;
            }
        }
    }
    out
}

fn mat_identity(r: usize) -> ActionMatrix {
    (0..r).map(|i| (0..r).map(|j| u64::from(i == j)).collect()).collect()
}

fn negation_matrix(r: usize, p: u64) -> ActionMatrix {
    (0..r)
        .map(|i| (0..r).map(|j| if i == j { (p - 1) % p } else { 0 }).collect())
        .collect()
}

fn apply_action(coords: &[u64], m: &ActionMatrix, p: u64) -> Vec<u64> {
    let r = coords.len();
    let mut out = vec![0u64; r];
    for i in 0..r {
        if coords[i] == 0 {
            continue;
        }
        for j in 0..r {
            out[j] = (out[j] + coords[i] * m[i][j]) % p;
        }
    }
    out
}

fn canonical_subspace(basis: &[Vec<u64>], m: &ActionMatrix, p: u64) -> Vec<Vec<u64>> {
    let rows: Vec<Vec<u64>> = basis.iter().map(|r| apply_action(r, m, p)).collect();
    rref_mod_p(rows, p)
}

const ACTION_CLOSURE_CAP: usize = 200_000;

/// Full element list of the group generated by the action matrices, or None
/// when it exceeds the cap (callers then fall back to generator-only orbit
/// walks and skip stabilizer pruning).
fn action_closure(gens: &[ActionMatrix], r: usize, p: u64) -> Option<Vec<ActionMatrix>> {
    let mut seen: HashSet<ActionMatrix> = HashSet::new();
    let mut order = Vec::new();
    let mut queue = VecDeque::new();
    let id = mat_identity(r);
    seen.insert(id.clone());
    order.push(id.clone());
    queue.push_back(id);
    while let Some(m) = queue.pop_front() {
        for g in gens {
            let next = mat_mul_mod(&m, g, p);
            if seen.insert(next.clone()) {
                if order.len() >= ACTION_CLOSURE_CAP {
                    return None;
                }
                order.push(next.clone());
                queue.push_back(next);
            }
        }
    }
    Some(order)
}

/// Matrix over F_p of the action induced on the discriminant group by an
/// isometry of the lattice: row k is the class of the image of the k-th
/// group generator, so classes transform by x -> x . A.
fn disc_action_matrix(l: &Lattice, d: &DiscriminantGroup, iso: &Isometry) -> Result<ActionMatrix> {
    let mut rows = Vec::with_capacity(d.num_factors());
    for gen_vec in d.generators() {
        let coords = l
            .coords_of(gen_vec)
            .ok_or_else(|| Error::Input("discriminant generator leaves the span".into()))?;
        let ambient = l.vector_from_coords(&iso.apply_coords(&coords));
        rows.push(coords_to_u64(&d.class_coords(&ambient)?)?);
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// Prepared instance data shared by the search stages.

struct EligClass {
    coords_u: Vec<u64>,
    min: Rational,
    vectors: Vec<AmbientVector>,
}

struct Prepared {
    joined: Lattice,
    db: Option<DiscriminantGroup>,
    q: Option<Rational>,
    t: usize,
    residues: Vec<Rational>,
    eligible: Vec<EligClass>,
    census_requirement: usize,
    right_actions: Vec<ActionMatrix>,
    degenerate_right: bool,
}

fn prepare(config: &SearchConfig) -> Result<Prepared> {
    let joined = config.left.orthogonal_sum(&config.right);
    let opts = &config.opts;
    let s = config.glue_rank;

    // All frame classes must achieve the same coset minimum; the candidate
    // norm residue and the census requirement both come from it. A zero left
    // summand carries the zero frame with minimum 0.
    let beta = if config.left.rank() == 0 {
        Rational::zero()
    } else {
        let mut beta: Option<Rational> = None;
        for (i, v) in config.frame.iter().enumerate() {
            let m = coset_minimum(&config.left, v, opts)?;
            if m != *config.frame_gram.at(i, i) {
                return Err(Error::Input(
                    "frame representatives must achieve their coset minima".into(),
                ));
            }
            match &beta {
                None => beta = Some(m),
                Some(b) => {
                    if *b != m {
                        return Err(Error::Input("frame coset minima must be uniform".into()));
                    }
                }
            }
        }
        beta.expect("frame is nonempty")
    };
    let min_floor = &config.target_min - &beta;

    if config.right.rank() == 0 {
        return Ok(Prepared {
            joined,
            db: None,
            q: None,
            t: s,
            residues: Vec::new(),
            eligible: Vec::new(),
            census_requirement: 0,
            right_actions: Vec::new(),
            degenerate_right: true,
        });
    }

    let db = discriminant_group(&config.right)?;
    let t = anchor_count(s);
    let residues: Vec<Rational> = (0..t)
        .map(|a| {
            if a + 1 < s {
                mod_one(&-config.frame_gram.at(a, a + 1))
            } else {
                Rational::zero()
            }
        })
        .collect();

    // Classes that can sit opposite a frame class: coset minimum at least
    // target − β and congruent to −β mod 2Z (which forces the quadratic-form
    // match). Their minimal vectors are the candidate material.
    let mut eligible = Vec::new();
    let mut q: Option<Rational> = None;
    for coords in db.all_classes() {
        if coords.iter().all(|c| c.is_zero()) {
            continue;
        }
        let rep = db.representative(&coords);
        let m = coset_minimum(&config.right, &rep, opts)?;
        if ((&m + &beta) / rat_i(2)).is_integer() && m >= min_floor && m.is_positive() {
            let report = coset_short_vectors(&config.right, &rep, &m, opts)?;
            let mut vectors = Vec::with_capacity(report.vectors.len());
            for (x, norm) in &report.vectors {
                if *norm == m {
                    let xr: Vec<Rational> = x.iter().map(|c| Rational::from(c.clone())).collect();
                    let offset = config.right.vector_from_coords(&xr);
                    let v: AmbientVector =
                        rep.iter().zip(offset.iter()).map(|(a, b)| a + b).collect();
                    vectors.push(v);
                }
            }
            match &q {
                None => q = Some(m.clone()),
                Some(cur) if m < *cur => q = Some(m.clone()),
                _ => {}
            }
            eligible.push(EligClass {
                coords_u: coords_to_u64(&coords)?,
                min: m,
                vectors,
            });
        }
    }

    // The left anchor span transfers a lower bound on how many eligible
    // classes the right anchor span must contain.
    let census_requirement = left_anchor_census(config, &beta, t)?;

    let mut right_actions = vec![negation_matrix(db.num_factors(), config.p)];
    for g in &config.right_symmetry {
        right_actions.push(disc_action_matrix(&config.right, &db, g)?);
    }

    Ok(Prepared {
        joined,
        db: Some(db),
        q,
        t,
        residues,
        eligible,
        census_requirement,
        right_actions,
        degenerate_right: false,
    })
}

/// Least coset minimum over the eligible classes of the right summand: the
/// norm at which candidate vectors appear. None when no class is eligible
/// or the right summand is zero.
pub fn candidate_norm(config: &SearchConfig) -> Result<Option<Rational>> {
    Ok(prepare(config)?.q)
}

/// Number of classes in the span of the first `t` frame classes whose coset
/// minimum equals the frame minimum.
fn left_anchor_census(config: &SearchConfig, beta: &Rational, t: usize) -> Result<usize> {
    if config.left.rank() == 0 {
        // The zero class achieves minimum 0 = β.
        return Ok(1);
    }
    let da = discriminant_group(&config.left)?;
    let anchor_classes: Vec<Vec<BigInt>> = config.frame[..t]
        .iter()
        .map(|v| da.class_coords(v))
        .collect::<Result<_>>()?;
    let mut count = 0usize;
    let mut lambda = vec![0u64; t];
    loop {
        let mut cls = vec![BigInt::zero(); da.num_factors()];
        for (l, c) in lambda.iter().zip(anchor_classes.iter()) {
            cls = da.add(&cls, &da.scale(&BigInt::from(*l), c));
        }
        // The zero class has minimum 0 and the frame minimum is positive.
        let m = if da.is_zero_class(&cls) {
            Rational::zero()
        } else {
            coset_minimum(&config.left, &da.representative(&cls), &config.opts)?
        };
        if m == *beta {
            count += 1;
        }
        // Odometer over F_p^t.
        let mut pos = t;
        loop {
            if pos == 0 {
                return Ok(count);
            }
            pos -= 1;
            lambda[pos] += 1;
            if lambda[pos] < config.p {
                break;
            }
            lambda[pos] = 0;
        }
    }
}

// ---------------------------------------------------------------------------
// Anchor enumeration.

/// One search branch: an anchor subspace orbit representative together with
/// pinned anchor classes and coset-minimal representative vectors.
#[derive(Clone, Debug)]
pub struct AnchorBranch {
    pub id: usize,
    /// Echelon basis of the anchor subspace of B#/B.
    pub subspace: Vec<Vec<u64>>,
    /// Class coordinates of the anchors (t of them, or s zero classes when
    /// the right summand is zero).
    pub anchor_classes: Vec<Vec<BigInt>>,
    /// Coset-minimal representatives of the anchor classes in B's ambient.
    pub anchor_vectors: Vec<AmbientVector>,
}

pub fn anchor_enumeration(config: &SearchConfig) -> Result<Vec<AnchorBranch>> {
    let prep = prepare(config)?;
    anchor_enumeration_prepared(config, &prep)
}

fn anchor_enumeration_prepared(config: &SearchConfig, prep: &Prepared) -> Result<Vec<AnchorBranch>> {
    if prep.degenerate_right {
        // Pure left-side overlattice: all glue positions carry the zero
        // vector of the rank-0 summand.
        return Ok(vec![AnchorBranch {
            id: 0,
            subspace: Vec::new(),
            anchor_classes: vec![Vec::new(); config.glue_rank],
            anchor_vectors: vec![Vec::new(); config.glue_rank],
        }]);
    }
    let db = prep.db.as_ref().expect("nondegenerate right");
    if prep.eligible.is_empty() {
        return Ok(Vec::new());
    }
    let p = config.p;
    let r = db.num_factors();
    let t = prep.t;
    let elig_index: HashMap<Vec<u64>, usize> = prep
        .eligible
        .iter()
        .enumerate()
        .map(|(i, e)| (e.coords_u.clone(), i))
        .collect();

    // Subspace survey: t-dimensional subspaces holding at least as many
    // eligible classes as the left anchor span demands, reduced to orbit
    // representatives under the discriminant action of the symmetry.
    let closure = action_closure(&prep.right_actions, r, p);
    let mut survivors: Vec<Vec<Vec<u64>>> = Vec::new();
    let mut visited: HashSet<Vec<Vec<u64>>> = HashSet::new();
    for basis in subspaces(db, t)? {
        let canon = rref_mod_p(basis.clone(), p);
        if visited.contains(&canon) {
            continue;
        }
        let members = subspace_members(&canon, p);
        let count = members.iter().filter(|m| elig_index.contains_key(*m)).count();
        // Mark the whole orbit visited regardless, so rejected subspaces do
        // not resurface through a symmetric image.
        let orbit = subspace_orbit(&canon, &prep.right_actions, closure.as_deref(), p);
        for img in &orbit {
            visited.insert(img.clone());
        }
        if count >= prep.census_requirement {
            survivors.push(canon);
        }
    }

    let mut branches = Vec::new();
    for subspace in survivors {
        let members = subspace_members(&subspace, p);
        let eligible_in: Vec<Vec<u64>> = members
            .into_iter()
            .filter(|m| elig_index.contains_key(m))
            .collect();
        // Stabilizer of the subspace, for pinning the anchors inside it.
        let stab: Option<Vec<ActionMatrix>> = closure.as_ref().map(|all| {
            all.iter()
                .filter(|m| canonical_subspace(&subspace, m, p) == subspace)
                .cloned()
                .collect()
        });
        // Without the closure the subspace stabilizer is unknown; negation
        // preserves every subspace, so it is the one safe reduction left.
        let neg_only = [negation_matrix(r, p)];
        let c1_reps = match &stab {
            Some(list) => orbit_representatives(&eligible_in, Some(list), &[], p),
            None => orbit_representatives(&eligible_in, None, &neg_only, p),
        };
        let c1_list: Vec<Vec<u64>> = match config.pinning {
            Pinning::TryAll => c1_reps,
            Pinning::PinFirst => c1_reps.into_iter().take(1).collect(),
        };
        for c1 in c1_list {
            if t == 1 {
                branches.push(make_branch(config, db, &subspace, vec![c1.clone()], branches.len())?);
                continue;
            }
            // Second anchor: eligible classes completing the subspace with
            // the declared cross congruence, reduced under the stabilizer of
            // the first anchor.
            let cross = mod_one(&-config.frame_gram.at(0, 1));
            let mut c2_candidates = Vec::new();
            for cand in &eligible_in {
                let pair = rref_mod_p(vec![c1.clone(), cand.clone()], p);
                if pair.len() != 2 {
                    continue;
                }
                let b = db.bilinear(&coords_to_big(&c1), &coords_to_big(cand));
                if mod_one(&b) != cross {
                    continue;
                }
                c2_candidates.push(cand.clone());
            }
            let point_stab: Option<Vec<ActionMatrix>> = stab.as_ref().map(|list| {
                list.iter()
                    .filter(|m| apply_action(&c1, m, p) == c1)
                    .cloned()
                    .collect()
            });
            let c2_reps = match &point_stab {
                Some(ps) => orbit_representatives(&c2_candidates, Some(ps), &[], p),
                None => c2_candidates,
            };
            for c2 in c2_reps {
                branches.push(make_branch(
                    config,
                    db,
                    &subspace,
                    vec![c1.clone(), c2],
                    branches.len(),
                )?);
            }
        }
    }
    Ok(branches)
}

fn subspace_members(basis: &[Vec<u64>], p: u64) -> Vec<Vec<u64>> {
    let r = basis.first().map_or(0, |b| b.len());
    let k = basis.len();
    let mut out = Vec::new();
    let mut lambda = vec![0u64; k];
    loop {
        let mut m = vec![0u64; r];
        for (l, row) in lambda.iter().zip(basis.iter()) {
            for (mi, x) in m.iter_mut().zip(row.iter()) {
                *mi = (*mi + l * x) % p;
            }
        }
        if m.iter().any(|&x| x != 0) {
            out.push(m);
        }
        let mut pos = k;
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            lambda[pos] += 1;
            if lambda[pos] < p {
                break;
            }
            lambda[pos] = 0;
        }
    }
}

fn subspace_orbit(
    canon: &[Vec<u64>],
    gens: &[ActionMatrix],
    closure: Option<&[ActionMatrix]>,
    p: u64,
) -> Vec<Vec<Vec<u64>>> {
    if let Some(all) = closure {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for m in all {
            let img = canonical_subspace(canon, m, p);
            if seen.insert(img.clone()) {
                out.push(img);
            }
        }
        return out;
    }
    let mut seen: HashSet<Vec<Vec<u64>>> = HashSet::new();
    let mut queue = VecDeque::new();
    seen.insert(canon.to_vec());
    queue.push_back(canon.to_vec());
    let mut out = vec![canon.to_vec()];
    while let Some(cur) = queue.pop_front() {
        for g in gens {
            let img = canonical_subspace(&cur, g, p);
            if seen.insert(img.clone()) {
                out.push(img.clone());
                queue.push_back(img);
            }
        }
    }
    out
}

/// First-seen representatives of the orbits of `classes` under the given
/// element list (or generator walk when no full closure is available).
fn orbit_representatives(
    classes: &[Vec<u64>],
    elements: Option<&[ActionMatrix]>,
    gens: &[ActionMatrix],
    p: u64,
) -> Vec<Vec<u64>> {
    let class_set: HashSet<Vec<u64>> = classes.iter().cloned().collect();
    let mut assigned: HashSet<Vec<u64>> = HashSet::new();
    let mut reps = Vec::new();
    for c in classes {
        if assigned.contains(c) {
            continue;
        }
        reps.push(c.clone());
        match elements {
            Some(all) => {
                for m in all {
                    let img = apply_action(c, m, p);
                    if class_set.contains(&img) {
                        assigned.insert(img);
                    }
                }
            }
            None => {
                let mut queue = VecDeque::new();
                assigned.insert(c.clone());
                queue.push_back(c.clone());
                while let Some(cur) = queue.pop_front() {
                    for g in gens {
                        let img = apply_action(&cur, g, p);
                        if class_set.contains(&img) && assigned.insert(img.clone()) {
                            queue.push_back(img);
                        }
                    }
                }
            }
        }
    }
    reps
}

fn make_branch(
    config: &SearchConfig,
    db: &DiscriminantGroup,
    subspace: &[Vec<u64>],
    anchor_coords: Vec<Vec<u64>>,
    id: usize,
) -> Result<AnchorBranch> {
    let mut anchor_classes = Vec::new();
    let mut anchor_vectors = Vec::new();
    for coords in &anchor_coords {
        let big = coords_to_big(coords);
        let rep = db.representative(&big);
        let m = coset_minimum(&config.right, &rep, &config.opts)?;
        let report = coset_short_vectors(&config.right, &rep, &m, &config.opts)?;
        let (x, _) = report
            .vectors
            .first()
            .ok_or_else(|| Error::Verification("coset minimum without witnesses".into()))?;
        let xr: Vec<Rational> = x.iter().map(|c| Rational::from(c.clone())).collect();
        let offset = config.right.vector_from_coords(&xr);
        let v: AmbientVector = rep.iter().zip(offset.iter()).map(|(a, b)| a + b).collect();
        anchor_classes.push(big);
        anchor_vectors.push(v);
    }
    Ok(AnchorBranch {
        id,
        subspace: subspace.to_vec(),
        anchor_classes,
        anchor_vectors,
    })
}

// ---------------------------------------------------------------------------
// Candidate pool and per-depth filter.

/// Vectors of B# that can be glued against a frame class past the given
/// anchors: coset-minimal vectors of the eligible classes satisfying the
/// frame's congruence row against each anchor, in (norm, lex) order. With
/// as many anchors as the glue rank there is nothing left to extend and the
/// pool is empty.
pub fn candidate_pool(config: &SearchConfig, anchors: &[AmbientVector]) -> Result<Vec<AmbientVector>> {
    let prep = prepare(config)?;
    let pool = candidate_pool_prepared(config, &prep, anchors)?;
    Ok(pool.into_iter().map(|(v, _)| v).collect())
}

fn candidate_pool_prepared(
    config: &SearchConfig,
    prep: &Prepared,
    anchors: &[AmbientVector],
) -> Result<Vec<(AmbientVector, Vec<u64>)>> {
    if prep.degenerate_right {
        return Ok(Vec::new());
    }
    if anchors.len() > prep.t {
        return Err(Error::Input(format!(
            "at most {} anchors are supported",
            prep.t
        )));
    }
    let rdual = config.right.dual();
    for a in anchors {
        if !rdual.contains(a) {
            return Err(Error::Input("anchor is not in the dual of the right summand".into()));
        }
    }
    if anchors.len() == config.glue_rank {
        return Ok(Vec::new());
    }
    let mut pool: Vec<(AmbientVector, Vec<u64>, Rational)> = Vec::new();
    for class in &prep.eligible {
        let probe = &class.vectors[0];
        let ok = anchors.iter().enumerate().all(|(a, ca)| {
            mod_one(&config.right.inner(probe, ca)) == prep.residues[a]
        });
        if !ok {
            continue;
        }
        for v in &class.vectors {
            pool.push((v.clone(), class.coords_u.clone(), class.min.clone()));
        }
    }
    pool.sort_by(|x, y| x.2.cmp(&y.2).then_with(|| x.0.cmp(&y.0)));
    Ok(pool.into_iter().map(|(v, c, _)| (v, c)).collect())
}

/// Filters the pool for frame position `depth` (1-based, past the anchors):
/// a candidate survives when the test lattice generated by the anchors and
/// this single extra glue vector is integral with no nonzero vector below
/// the target minimum. Candidates of the same discriminant class generate
/// the same test lattice, so the test runs once per class.
pub fn depth_filter(
    config: &SearchConfig,
    anchors: &[AmbientVector],
    depth: usize,
    pool: &[AmbientVector],
) -> Result<Vec<AmbientVector>> {
    let prep = prepare(config)?;
    let db = match &prep.db {
        Some(db) => db,
        None => return Ok(pool.to_vec()),
    };
    let mut tagged = Vec::with_capacity(pool.len());
    for v in pool {
        let class = coords_to_u64(&db.class_coords(v)?)?;
        tagged.push((v.clone(), class));
    }
    let kept = depth_filter_prepared(config, &prep, anchors, depth, &tagged)?;
    Ok(kept.into_iter().map(|(v, _)| v).collect())
}

fn depth_filter_prepared(
    config: &SearchConfig,
    prep: &Prepared,
    anchors: &[AmbientVector],
    depth: usize,
    pool: &[(AmbientVector, Vec<u64>)],
) -> Result<Vec<(AmbientVector, Vec<u64>)>> {
    if depth == 0 || depth > config.glue_rank || depth <= anchors.len() {
        return Err(Error::Input("depth must address a position past the anchors".into()));
    }
    let base = anchored_lattice(config, prep, anchors)?;
    let mut verdict: HashMap<Vec<u64>, bool> = HashMap::new();
    let mut kept = Vec::new();
    for (v, class) in pool {
        let ok = match verdict.get(class) {
            Some(&ok) => ok,
            None => {
                let row = glue_row(config, depth - 1, v);
                let test = lattice_sum_vectors(&base, &[row])?;
                let ok = test.is_integral()
                    && !has_vector_below(&test, &config.target_min, &config.opts)?;
                verdict.insert(class.clone(), ok);
                ok
            }
        };
        if ok {
            kept.push((v.clone(), class.clone()));
        }
    }
    Ok(kept)
}

fn glue_row(config: &SearchConfig, frame_idx: usize, right_vec: &AmbientVector) -> AmbientVector {
    let mut row = config.frame[frame_idx].clone();
    row.extend(right_vec.iter().cloned());
    row
}

fn anchored_lattice(
    config: &SearchConfig,
    prep: &Prepared,
    anchors: &[AmbientVector],
) -> Result<Lattice> {
    let rows: Vec<AmbientVector> = anchors
        .iter()
        .enumerate()
        .map(|(i, v)| glue_row(config, i, v))
        .collect();
    lattice_sum_vectors(&prep.joined, &rows)
}

// ---------------------------------------------------------------------------
// Search driver.

/// Read-only view of an accepted search node, handed to observers.
pub struct SearchState<'a> {
    /// Glue vectors placed so far, anchors included.
    pub depth: usize,
    /// (frame index, right-side vector) in placement order.
    pub chosen: &'a [(usize, AmbientVector)],
    pub current_lattice: &'a Lattice,
    /// Candidate vector lists for the depths past the anchors, in frame
    /// order.
    pub candidate_sets: &'a [Vec<AmbientVector>],
}

#[derive(Clone, Debug)]
pub struct SearchFinding {
    pub lattice: Lattice,
    pub minimum: Rational,
    pub kissing: u64,
    /// Order of the stabilizer of the lattice in Aut(A ⊥ B); None when
    /// stabilizer computation is disabled.
    pub stabilizer_order: Option<BigInt>,
    /// Branch that produced the orbit representative.
    pub first_branch: usize,
    /// Completed lattices fused into this orbit, the representative included.
    pub times_found: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct SearchStats {
    pub branches: usize,
    /// Class-level extensions attempted.
    pub nodes: u64,
    pub pruned_dependent: u64,
    pub pruned_not_integral: u64,
    pub pruned_short_vector: u64,
    /// Full-depth lattices rejected by the final verification.
    pub rejected_final: u64,
    pub raw_found: usize,
    /// Candidate pool size per branch.
    pub pool_sizes: Vec<usize>,
    /// Filtered candidate-list sizes per branch, in frame order.
    pub candidate_sizes: Vec<Vec<usize>>,
}

#[derive(Clone, Debug)]
pub struct SearchResult {
    pub lattices: Vec<SearchFinding>,
    pub stats: SearchStats,
    /// Branches aborted by budget exhaustion; their partial results are
    /// discarded so a resumed run re-explores them.
    pub exhausted_branches: Vec<usize>,
    /// No anchor satisfies the congruence and census constraints: the
    /// instance admits no glue of the requested shape, as opposed to a
    /// searched instance with an empty result.
    pub infeasible: bool,
    /// Branches left unprocessed by cooperative cancellation.
    pub stopped_early: bool,
    pub wall: Duration,
}

/// External controls for a run: checkpointing, resumption, cancellation.
#[derive(Default)]
pub struct RunControl<'a> {
    /// Write a checkpoint after each completed branch.
    pub checkpoint_path: Option<&'a Path>,
    /// Resume from a checkpoint written by a run of the same instance.
    pub resume_from: Option<&'a Path>,
    /// Stop after this many branches have been processed in this run.
    pub stop_after_branches: Option<usize>,
}

pub fn run_search(config: &SearchConfig) -> Result<SearchResult> {
    run_search_controlled(config, &RunControl::default(), None)
}

pub fn run_search_controlled(
    config: &SearchConfig,
    control: &RunControl,
    mut observer: Option<&mut (dyn FnMut(&SearchState) + '_)>,
) -> Result<SearchResult> {
    let start = Instant::now();
    let prep = prepare(config)?;
    let branches = anchor_enumeration_prepared(config, &prep)?;
    let total = branches.len();

    let mut stats = SearchStats {
        branches: total,
        pool_sizes: vec![0; total],
        candidate_sizes: vec![Vec::new(); total],
        ..SearchStats::default()
    };
    let mut raws: Vec<(usize, Lattice)> = Vec::new();
    let mut exhausted: Vec<usize> = Vec::new();
    let mut completed: HashSet<usize> = HashSet::new();

    if let Some(path) = control.resume_from {
        let text = std::fs::read_to_string(path)?;
        let ck = parse_checkpoint(&text)?;
        restore_checkpoint(config, &prep, &ck, total, &mut stats, &mut raws, &mut completed)?;
    }

    let mut processed_this_run = 0usize;
    let mut stopped_early = false;
    for branch in &branches {
        if completed.contains(&branch.id) {
            continue;
        }
        if let Some(cap) = control.stop_after_branches {
            if processed_this_run >= cap {
                stopped_early = true;
                break;
            }
        }
        let outcome = process_branch(config, &prep, branch, observer.as_deref_mut())?;
        stats.nodes += outcome.nodes;
        stats.pruned_dependent += outcome.pruned_dependent;
        stats.pruned_not_integral += outcome.pruned_not_integral;
        stats.pruned_short_vector += outcome.pruned_short_vector;
        stats.rejected_final += outcome.rejected_final;
        stats.pool_sizes[branch.id] = outcome.pool_size;
        stats.candidate_sizes[branch.id] = outcome.candidate_sizes.clone();
        if outcome.exhausted {
            exhausted.push(branch.id);
        } else {
            stats.raw_found += outcome.raws.len();
            for x in outcome.raws {
                raws.push((branch.id, x));
            }
            completed.insert(branch.id);
        }
        processed_this_run += 1;
        if let Some(path) = control.checkpoint_path {
            let mut sorted: Vec<usize> = completed.iter().copied().collect();
            sorted.sort_unstable();
            let text = render_checkpoint(config, total, &sorted, &stats, &raws);
            std::fs::write(path, text)?;
        }
    }

    let lattices = fuse_orbits(config, &prep, &raws)?;
    Ok(SearchResult {
        lattices,
        stats,
        exhausted_branches: exhausted,
        infeasible: total == 0 && !prep.degenerate_right,
        stopped_early,
        wall: start.elapsed(),
    })
}

struct BranchOutcome {
    raws: Vec<Lattice>,
    pool_size: usize,
    candidate_sizes: Vec<usize>,
    nodes: u64,
    pruned_dependent: u64,
    pruned_not_integral: u64,
    pruned_short_vector: u64,
    rejected_final: u64,
    exhausted: bool,
}

impl BranchOutcome {
    fn new() -> Self {
        BranchOutcome {
            raws: Vec::new(),
            pool_size: 0,
            candidate_sizes: Vec::new(),
            nodes: 0,
            pruned_dependent: 0,
            pruned_not_integral: 0,
            pruned_short_vector: 0,
            rejected_final: 0,
            exhausted: false,
        }
    }
}

fn is_budget(e: &Error) -> bool {
    matches!(e, Error::BudgetExhausted { .. })
}

fn process_branch(
    config: &SearchConfig,
    prep: &Prepared,
    branch: &AnchorBranch,
    mut observer: Option<&mut (dyn FnMut(&SearchState) + '_)>,
) -> Result<BranchOutcome> {
    let mut out = BranchOutcome::new();
    let s = config.glue_rank;
    let t = branch.anchor_vectors.len();

    // Place the anchors one at a time so the state invariants hold on every
    // prefix, not just the full anchor set.
    let mut lattice = prep.joined.clone();
    let mut chosen: Vec<(usize, AmbientVector)> = Vec::new();
    for (i, v) in branch.anchor_vectors.iter().enumerate() {
        let row = glue_row(config, i, v);
        out.nodes += 1;
        let next = lattice_sum_vectors(&lattice, &[row])?;
        if !index_matches(config.p, prep, &next, i + 1) {
            out.pruned_dependent += 1;
            return Ok(out);
        }
        if !next.is_integral() {
            out.pruned_not_integral += 1;
            return Ok(out);
        }
        match has_vector_below(&next, &config.target_min, &config.opts) {
            Ok(true) => {
                out.pruned_short_vector += 1;
                return Ok(out);
            }
            Ok(false) => {}
            Err(e) if is_budget(&e) => {
                out.exhausted = true;
                return Ok(out);
            }
            Err(e) => return Err(e),
        }
        debug_assert!(next.contains_lattice(&lattice));
        lattice = next;
        chosen.push((i, v.clone()));
        if let Some(obs) = observer.as_deref_mut() {
            obs(&SearchState {
                depth: i + 1,
                chosen: &chosen,
                current_lattice: &lattice,
                candidate_sets: &[],
            });
        }
    }

    if t == s {
        match finalize(config, &lattice, &mut out) {
            Ok(()) => {}
            Err(e) if is_budget(&e) => out.exhausted = true,
            Err(e) => return Err(e),
        }
        return Ok(out);
    }

    // Candidate material for the open depths.
    let pool = match candidate_pool_prepared(config, prep, &branch.anchor_vectors) {
        Ok(p) => p,
        Err(e) if is_budget(&e) => {
            out.exhausted = true;
            return Ok(out);
        }
        Err(e) => return Err(e),
    };
    out.pool_size = pool.len();
    let mut candidate_sets: Vec<Vec<(AmbientVector, Vec<u64>)>> = Vec::new();
    for depth in (t + 1)..=s {
        match depth_filter_prepared(config, prep, &branch.anchor_vectors, depth, &pool) {
            Ok(c) => candidate_sets.push(c),
            Err(e) if is_budget(&e) => {
                out.exhausted = true;
                return Ok(out);
            }
            Err(e) => return Err(e),
        }
    }
    out.candidate_sizes = candidate_sets.iter().map(|c| c.len()).collect();

    // Processing order over the open frame positions.
    let mut order: Vec<usize> = (0..candidate_sets.len()).collect();
    if config.reorder_smallest_first {
        order.sort_by_key(|&i| candidate_sets[i].len());
    }

    // Observer-facing vector lists, in frame order.
    let observer_sets: Vec<Vec<AmbientVector>> = candidate_sets
        .iter()
        .map(|c| c.iter().map(|(v, _)| v.clone()).collect())
        .collect();

    // Per-depth class representatives: same-class candidates generate the
    // same extension, so one test per class suffices.
    let class_lists: Vec<Vec<(AmbientVector, Vec<u64>)>> = candidate_sets
        .iter()
        .map(|c| {
            let mut seen = HashSet::new();
            let mut reps = Vec::new();
            for (v, cls) in c {
                if seen.insert(cls.clone()) {
                    reps.push((v.clone(), cls.clone()));
                }
            }
            reps
        })
        .collect();

    let mut ctx = DfsCtx {
        config,
        prep,
        order: &order,
        class_lists: &class_lists,
        observer_sets: &observer_sets,
        t,
        out: &mut out,
    };
    let exhausted = if config.jobs > 1 && observer.is_none() {
        dfs_parallel(&mut ctx, &lattice, &chosen)?
    } else {
        dfs(&mut ctx, &lattice, &mut chosen, 0, &mut observer)?
    };
    out.exhausted = exhausted;
    if out.exhausted {
        out.raws.clear();
    }
    Ok(out)
}

/// A depth-k lattice must contain A ⊥ B with index exactly p^k: anything
/// less means a dependent glue class, which can never reach unimodularity
/// at full depth.
fn index_matches(p: u64, prep: &Prepared, l: &Lattice, k: usize) -> bool {
    let Some(idx) = prep.joined.index_in(l) else {
        return false;
    };
    idx == BigInt::from(p).pow(k as u32)
}

struct DfsCtx<'a> {
    config: &'a SearchConfig,
    prep: &'a Prepared,
    order: &'a [usize],
    class_lists: &'a [Vec<(AmbientVector, Vec<u64>)>],
    observer_sets: &'a [Vec<AmbientVector>],
    t: usize,
    out: &'a mut BranchOutcome,
}

fn dfs(
    ctx: &mut DfsCtx,
    lattice: &Lattice,
    chosen: &mut Vec<(usize, AmbientVector)>,
    pos: usize,
    observer: &mut Option<&mut (dyn FnMut(&SearchState) + '_)>,
) -> Result<bool> {
    if pos == ctx.order.len() {
        return match finalize(ctx.config, lattice, ctx.out) {
            Ok(()) => Ok(false),
            Err(e) if is_budget(&e) => Ok(true),
            Err(e) => Err(e),
        };
    }
    let list_idx = ctx.order[pos];
    let frame_idx = ctx.t + list_idx;
    let depth = ctx.t + pos + 1;
    for (v, _cls) in &ctx.class_lists[list_idx] {
        ctx.out.nodes += 1;
        let row = glue_row(ctx.config, frame_idx, v);
        let next = lattice_sum_vectors(lattice, &[row])?;
        if !index_matches(ctx.config.p, ctx.prep, &next, depth) {
            ctx.out.pruned_dependent += 1;
            continue;
        }
        if !next.is_integral() {
            ctx.out.pruned_not_integral += 1;
            continue;
        }
        match has_vector_below(&next, &ctx.config.target_min, &ctx.config.opts) {
            Ok(true) => {
                ctx.out.pruned_short_vector += 1;
                continue;
            }
            Ok(false) => {}
            Err(e) if is_budget(&e) => return Ok(true),
            Err(e) => return Err(e),
        }
        debug_assert!(next.contains_lattice(lattice));
        chosen.push((frame_idx, v.clone()));
        if let Some(obs) = observer.as_deref_mut() {
            obs(&SearchState {
                depth,
                chosen,
                current_lattice: &next,
                candidate_sets: ctx.observer_sets,
            });
        }
        let exhausted = dfs(ctx, &next, chosen, pos + 1, observer)?;
        chosen.pop();
        if exhausted {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Parallel variant: the first open depth's class list is split into
/// independent work items, mirroring the per-candidate partition of the
/// search; results merge in canonical candidate order.
fn dfs_parallel(ctx: &mut DfsCtx, lattice: &Lattice, chosen: &[(usize, AmbientVector)]) -> Result<bool> {
    use rayon::prelude::*;
    if ctx.order.is_empty() {
        let mut none = None;
        let mut chosen_mut = chosen.to_vec();
        return dfs(ctx, lattice, &mut chosen_mut, 0, &mut none);
    }
    let first = ctx.order[0];
    let items: Vec<usize> = (0..ctx.class_lists[first].len()).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(ctx.config.jobs)
        .build()
        .map_err(|e| Error::Input(format!("thread pool: {e}")))?;
    let config = ctx.config;
    let prep = ctx.prep;
    let order = ctx.order;
    let class_lists = ctx.class_lists;
    let observer_sets = ctx.observer_sets;
    let t = ctx.t;
    let results: Vec<Result<BranchOutcome>> = pool.install(|| {
        items
            .par_iter()
            .map(|&item| {
                let mut sub = BranchOutcome::new();
                let mut sub_ctx = DfsCtx {
                    config,
                    prep,
                    order,
                    class_lists,
                    observer_sets,
                    t,
                    out: &mut sub,
                };
                let mut chosen_mut = chosen.to_vec();
                let mut none: Option<&mut (dyn FnMut(&SearchState) + '_)> = None;
                let exhausted = dfs_single_first(
                    &mut sub_ctx,
                    lattice,
                    &mut chosen_mut,
                    item,
                    &mut none,
                )?;
                sub.exhausted = exhausted;
                Ok(sub)
            })
            .collect()
    });
    let mut exhausted = false;
    for r in results {
        let sub = r?;
        ctx.out.nodes += sub.nodes;
        ctx.out.pruned_dependent += sub.pruned_dependent;
        ctx.out.pruned_not_integral += sub.pruned_not_integral;
        ctx.out.pruned_short_vector += sub.pruned_short_vector;
        ctx.out.rejected_final += sub.rejected_final;
        exhausted |= sub.exhausted;
        ctx.out.raws.extend(sub.raws);
    }
    Ok(exhausted)
}

/// DFS restricted to a single first-level candidate, used as the parallel
/// work item body.
fn dfs_single_first(
    ctx: &mut DfsCtx,
    lattice: &Lattice,
    chosen: &mut Vec<(usize, AmbientVector)>,
    item: usize,
    observer: &mut Option<&mut (dyn FnMut(&SearchState) + '_)>,
) -> Result<bool> {
    let list_idx = ctx.order[0];
    let frame_idx = ctx.t + list_idx;
    let depth = ctx.t + 1;
    let (v, _cls) = &ctx.class_lists[list_idx][item];
    ctx.out.nodes += 1;
    let row = glue_row(ctx.config, frame_idx, v);
    let next = lattice_sum_vectors(lattice, &[row])?;
    if !index_matches(ctx.config.p, ctx.prep, &next, depth) {
        ctx.out.pruned_dependent += 1;
        return Ok(false);
    }
    if !next.is_integral() {
        ctx.out.pruned_not_integral += 1;
        return Ok(false);
    }
    match has_vector_below(&next, &ctx.config.target_min, &ctx.config.opts) {
        Ok(true) => {
            ctx.out.pruned_short_vector += 1;
            return Ok(false);
        }
        Ok(false) => {}
        Err(e) if is_budget(&e) => return Ok(true),
        Err(e) => return Err(e),
    }
    chosen.push((frame_idx, v.clone()));
    let exhausted = dfs(ctx, &next, chosen, 1, observer)?;
    chosen.pop();
    Ok(exhausted)
}

/// Full-depth verification with no shared state from the search: evenness,
/// unimodularity, and the exact minimum are recomputed from the finished
/// lattice alone.
fn finalize(config: &SearchConfig, lattice: &Lattice, out: &mut BranchOutcome) -> Result<()> {
    if !lattice.is_integral() || !lattice.is_even() || !lattice.is_unimodular() {
        out.rejected_final += 1;
        return Ok(());
    }
    let min = minimum(lattice, &config.opts)?;
    if min != config.target_min {
        out.rejected_final += 1;
        return Ok(());
    }
    out.raws.push(lattice.clone());
    Ok(())
}

// ---------------------------------------------------------------------------
// Orbit fusion and stabilizer orders.

fn fuse_orbits(
    config: &SearchConfig,
    prep: &Prepared,
    raws: &[(usize, Lattice)],
) -> Result<Vec<SearchFinding>> {
    let mut findings: Vec<SearchFinding> = Vec::new();
    if raws.is_empty() {
        return Ok(findings);
    }
    let mut engine = if config.compute_stabilizers {
        match CodeOrbitEngine::new(config, prep)? {
            Some(e) => FusionEngine::Codes(e),
            None => FusionEngine::Iso,
        }
    } else {
        FusionEngine::Iso
    };
    let mut orbit_sets: Vec<HashSet<Vec<Vec<u64>>>> = Vec::new();
    let mut sorted: Vec<&(usize, Lattice)> = raws.iter().collect();
    sorted.sort_by_key(|(b, _)| *b);
    for (branch, x) in sorted {
        let mut fused = false;
        match &mut engine {
            FusionEngine::Codes(code_engine) => {
                let code = code_engine.canonical_code(x)?;
                for (i, set) in orbit_sets.iter().enumerate() {
                    if set.contains(&code) {
                        findings[i].times_found += 1;
                        fused = true;
                        break;
                    }
                }
                if !fused {
                    let orbit = code_engine.orbit(&code);
                    let stab = code_engine.stabilizer_order(orbit.len());
                    let (min, kiss) = kissing_number(x, &config.opts)?;
                    findings.push(SearchFinding {
                        lattice: x.clone(),
                        minimum: min,
                        kissing: kiss,
                        stabilizer_order: Some(stab),
                        first_branch: *branch,
                        times_found: 1,
                    });
                    orbit_sets.push(orbit);
                }
            }
            FusionEngine::Iso => {
                for f in findings.iter_mut() {
                    if f.lattice.same_lattice(x)
                        || is_isometric(&f.lattice, x, &config.opts)?.is_some()
                    {
                        f.times_found += 1;
                        fused = true;
                        break;
                    }
                }
                if !fused {
                    let (min, kiss) = kissing_number(x, &config.opts)?;
                    findings.push(SearchFinding {
                        lattice: x.clone(),
                        minimum: min,
                        kissing: kiss,
                        stabilizer_order: None,
                        first_branch: *branch,
                        times_found: 1,
                    });
                    orbit_sets.push(HashSet::new());
                }
            }
        }
    }
    Ok(findings)
}

enum FusionEngine {
    Codes(CodeOrbitEngine),
    Iso,
}

/// Aut(A ⊥ B) acting on overlattices through their glue codes in the
/// discriminant group of the sum. Exact orbit membership and stabilizer
/// orders by the orbit-stabilizer theorem.
struct CodeOrbitEngine {
    dm: DiscriminantGroup,
    actions: Vec<ActionMatrix>,
    aut_order: BigInt,
    p: u64,
}

impl CodeOrbitEngine {
    fn new(config: &SearchConfig, prep: &Prepared) -> Result<Option<CodeOrbitEngine>> {
        let dm = discriminant_group(&prep.joined)?;
        if !dm.is_elementary(&BigInt::from(config.p)) {
            return Ok(None);
        }
        let aut = automorphism_group(&prep.joined, None, &config.opts)?;
        let mut actions = Vec::new();
        for g in aut.generators() {
            actions.push(disc_action_matrix(&prep.joined, &dm, g)?);
        }
        Ok(Some(CodeOrbitEngine {
            dm,
            actions,
            aut_order: aut.order().clone(),
            p: config.p,
        }))
    }

    fn canonical_code(&self, x: &Lattice) -> Result<Vec<Vec<u64>>> {
        let mut rows = Vec::new();
        for r in 0..x.basis().rows() {
            let row = x.basis().row_vec(r);
            rows.push(coords_to_u64(&self.dm.class_coords(&row)?)?);
        }
        Ok(rref_mod_p(rows, self.p))
    }

    fn orbit(&self, code: &[Vec<u64>]) -> HashSet<Vec<Vec<u64>>> {
        let mut seen: HashSet<Vec<Vec<u64>>> = HashSet::new();
        let mut queue = VecDeque::new();
        seen.insert(code.to_vec());
        queue.push_back(code.to_vec());
        while let Some(cur) = queue.pop_front() {
            for g in &self.actions {
                let img = canonical_subspace(&cur, g, self.p);
                if seen.insert(img.clone()) {
                    queue.push_back(img);
                }
            }
        }
        seen
    }

    fn stabilizer_order(&self, orbit_len: usize) -> BigInt {
        let len = BigInt::from(orbit_len as u64);
        debug_assert!((&self.aut_order % &len).is_zero());
        &self.aut_order / len
    }
}

// ---------------------------------------------------------------------------
// Checkpoints.

/// Parsed checkpoint contents. Completed branch ids, accumulated statistics,
/// and the raw (pre-fusion) lattices found so far, serialized as cleared
/// integer bases over the instance's joined ambient space.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Checkpoint {
    pub digest: String,
    pub total_branches: usize,
    pub completed: Vec<usize>,
    pub stats: SearchStats,
    /// (branch id, rank, denominator, integer basis rows).
    pub raws: Vec<(usize, usize, BigInt, Vec<Vec<BigInt>>)>,
}

fn render_checkpoint(
    config: &SearchConfig,
    total: usize,
    completed: &[usize],
    stats: &SearchStats,
    raws: &[(usize, Lattice)],
) -> String {
    let mut out = String::new();
    out.push_str("latt-gluesearch-checkpoint 1\n");
    out.push_str(&format!("digest {}\n", config.digest()));
    out.push_str(&format!("branches {total}\n"));
    out.push_str("completed");
    for id in completed {
        out.push_str(&format!(" {id}"));
    }
    out.push('\n');
    out.push_str(&format!(
        "stats nodes {} dep {} nonint {} short {} rejected {} raw {}\n",
        stats.nodes,
        stats.pruned_dependent,
        stats.pruned_not_integral,
        stats.pruned_short_vector,
        stats.rejected_final,
        stats.raw_found
    ));
    out.push_str("pools");
    for sz in &stats.pool_sizes {
        out.push_str(&format!(" {sz}"));
    }
    out.push('\n');
    for (i, sizes) in stats.candidate_sizes.iter().enumerate() {
        out.push_str(&format!("cands {i}"));
        for sz in sizes {
            out.push_str(&format!(" {sz}"));
        }
        out.push('\n');
    }
    for (branch, l) in raws {
        let (ib, den) = l.basis().clear_denominators();
        out.push_str(&format!(
            "raw {branch} rank {} den {den}\n",
            l.basis().rows()
        ));
        for r in 0..ib.rows() {
            let row: Vec<String> = (0..ib.cols()).map(|c| ib.at(r, c).to_string()).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
    }
    out.push_str("end\n");
    out
}

/// Parses checkpoint text. Strict: any malformed line is an input error.
pub fn parse_checkpoint(text: &str) -> Result<Checkpoint> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Parse("empty checkpoint".into()))?;
    if header.trim() != "latt-gluesearch-checkpoint 1" {
        return Err(Error::Parse("unrecognized checkpoint header".into()));
    }
    let mut digest = None;
    let mut total = None;
    let mut completed = Vec::new();
    let mut stats = SearchStats::default();
    let mut raws: Vec<(usize, usize, BigInt, Vec<Vec<BigInt>>)> = Vec::new();
    let mut pending_rows: Option<(usize, usize, BigInt, Vec<Vec<BigInt>>)> = None;
    let mut saw_end = false;
    for line in lines {
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        if let Some((branch, rank, den, mut rows)) = pending_rows.take() {
            let row: Vec<BigInt> = line
                .split_whitespace()
                .map(|t| t.parse::<BigInt>().map_err(|_| Error::Parse("bad basis entry".into())))
                .collect::<Result<_>>()?;
            rows.push(row);
            if rows.len() == rank {
                raws.push((branch, rank, den, rows));
            } else {
                pending_rows = Some((branch, rank, den, rows));
            }
            continue;
        }
        if saw_end {
            return Err(Error::Parse("content after end marker".into()));
        }
        let mut toks = line.split_whitespace();
        match toks.next() {
            Some("digest") => {
                digest = Some(
                    toks.next()
                        .ok_or_else(|| Error::Parse("missing digest value".into()))?
                        .to_string(),
                );
            }
            Some("branches") => {
                total = Some(parse_usize(toks.next())?);
            }
            Some("completed") => {
                for t in toks {
                    completed.push(
                        t.parse::<usize>().map_err(|_| Error::Parse("bad branch id".into()))?,
                    );
                }
            }
            Some("stats") => {
                let mut kv = HashMap::new();
                let rest: Vec<&str> = toks.collect();
                if rest.len() % 2 != 0 {
                    return Err(Error::Parse("stats line is not key/value pairs".into()));
                }
                for pair in rest.chunks(2) {
                    kv.insert(pair[0].to_string(), pair[1].to_string());
                }
                let get = |k: &str| -> Result<u64> {
                    kv.get(k)
                        .ok_or_else(|| Error::Parse(format!("stats missing {k}")))?
                        .parse::<u64>()
                        .map_err(|_| Error::Parse(format!("bad stats value for {k}")))
                };
                stats.nodes = get("nodes")?;
                stats.pruned_dependent = get("dep")?;
                stats.pruned_not_integral = get("nonint")?;
                stats.pruned_short_vector = get("short")?;
                stats.rejected_final = get("rejected")?;
                stats.raw_found = get("raw")? as usize;
            }
            Some("pools") => {
                stats.pool_sizes = toks
                    .map(|t| t.parse::<usize>().map_err(|_| Error::Parse("bad pool size".into())))
                    .collect::<Result<_>>()?;
            }
            Some("cands") => {
                let idx = parse_usize(toks.next())?;
                if idx > 4096 {
                    return Err(Error::Parse("oversized candidate index".into()));
                }
                let sizes: Vec<usize> = toks
                    .map(|t| {
                        t.parse::<usize>().map_err(|_| Error::Parse("bad candidate size".into()))
                    })
                    .collect::<Result<_>>()?;
                if stats.candidate_sizes.len() <= idx {
                    stats.candidate_sizes.resize(idx + 1, Vec::new());
                }
                stats.candidate_sizes[idx] = sizes;
            }
            Some("raw") => {
                let branch = parse_usize(toks.next())?;
                if toks.next() != Some("rank") {
                    return Err(Error::Parse("malformed raw header".into()));
                }
                let rank = parse_usize(toks.next())?;
                if toks.next() != Some("den") {
                    return Err(Error::Parse("malformed raw header".into()));
                }
                let den = toks
                    .next()
                    .ok_or_else(|| Error::Parse("missing denominator".into()))?
                    .parse::<BigInt>()
                    .map_err(|_| Error::Parse("bad denominator".into()))?;
                if den.is_zero() {
                    return Err(Error::Parse("zero denominator".into()));
                }
                if rank == 0 {
                    raws.push((branch, 0, den, Vec::new()));
                } else {
                    if rank > 4096 {
                        return Err(Error::Parse("oversized rank".into()));
                    }
                    pending_rows = Some((branch, rank, den, Vec::new()));
                }
            }
            Some("end") => {
                saw_end = true;
            }
            Some(other) => {
                return Err(Error::Parse(format!("unrecognized checkpoint line: {other}")));
            }
            None => {}
        }
    }
    if pending_rows.is_some() {
        return Err(Error::Parse("truncated basis rows".into()));
    }
    if !saw_end {
        return Err(Error::Parse("missing end marker".into()));
    }
    Ok(Checkpoint {
        digest: digest.ok_or_else(|| Error::Parse("missing digest".into()))?,
        total_branches: total.ok_or_else(|| Error::Parse("missing branch count".into()))?,
        completed,
        stats,
        raws,
    })
}

fn parse_usize(tok: Option<&str>) -> Result<usize> {
    tok.ok_or_else(|| Error::Parse("missing integer".into()))?
        .parse::<usize>()
        .map_err(|_| Error::Parse("bad integer".into()))
}

fn restore_checkpoint(
    config: &SearchConfig,
    prep: &Prepared,
    ck: &Checkpoint,
    total: usize,
    stats: &mut SearchStats,
    raws: &mut Vec<(usize, Lattice)>,
    completed: &mut HashSet<usize>,
) -> Result<()> {
    if ck.digest != config.digest() {
        return Err(Error::Checkpoint(
            "checkpoint was written for a different instance".into(),
        ));
    }
    if ck.total_branches != total {
        return Err(Error::Checkpoint("branch count mismatch".into()));
    }
    if ck.stats.pool_sizes.len() != total {
        return Err(Error::Checkpoint("pool size table mismatch".into()));
    }
    stats.nodes = ck.stats.nodes;
    stats.pruned_dependent = ck.stats.pruned_dependent;
    stats.pruned_not_integral = ck.stats.pruned_not_integral;
    stats.pruned_short_vector = ck.stats.pruned_short_vector;
    stats.rejected_final = ck.stats.rejected_final;
    stats.raw_found = ck.stats.raw_found;
    stats.pool_sizes = ck.stats.pool_sizes.clone();
    let mut cands = ck.stats.candidate_sizes.clone();
    cands.resize(total, Vec::new());
    stats.candidate_sizes = cands;
    for id in &ck.completed {
        if *id >= total {
            return Err(Error::Checkpoint("completed branch out of range".into()));
        }
        completed.insert(*id);
    }
    let amb = prep.joined.ambient_dim();
    for (branch, rank, den, rows) in &ck.raws {
        let mut rat_rows = Vec::with_capacity(*rank);
        for row in rows {
            if row.len() != amb {
                return Err(Error::Checkpoint("raw basis has wrong width".into()));
            }
            rat_rows.push(
                row.iter()
                    .map(|x| Rational::new(x.clone(), den.clone()))
                    .collect::<Vec<Rational>>(),
            );
        }
        let basis = RatMatrix::from_rows(rat_rows);
        let l = Lattice::new(prep.joined.ambient_form().clone(), basis, None)?;
        if !l.contains_lattice(&prep.joined) {
            return Err(Error::Checkpoint("raw lattice does not contain the sum".into()));
        }
        raws.push((*branch, l));
    }
    Ok(())
}
