//! Fincke-Pohst branch-and-bound enumeration of short lattice and coset
//! vectors, entirely in exact arithmetic.
//!
//! The quadratic form is completed into Q(y) = sum_i q_i (y_i + c_i)^2 with
//! c_i depending on the later coordinates only. All denominators (completion
//! data, coset shift, bound) are cleared into one global scale factor M, so
//! every pruning comparison is an exact big-integer comparison; no rounding
//! and no rational normalization happens inside the walk. Every call carries
//! a node budget: exceeding it is an error, never a silent truncation.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use std::ops::ControlFlow;

use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::lll::{default_delta, lll_reduce};
use crate::mat::{IntMatrix, RatMatrix};
use crate::rat::{is_integer, Rational};

pub const DEFAULT_BUDGET: u64 = 1_000_000_000;

/// Enumeration limits. `Default` honors the LATT_BUDGET environment variable.
#[derive(Clone, Debug)]
pub struct EnumOptions {
    pub budget: u64,
}

impl Default for EnumOptions {
    fn default() -> Self {
        let budget = std::env::var("LATT_BUDGET")
            .ok()
            .and_then(|s| s.parse().ok())
            .unwrap_or(DEFAULT_BUDGET);
        EnumOptions { budget }
    }
}

/// Result of a symmetric (lattice) enumeration. `vectors` holds one
/// representative of every +-pair, in (norm, lexicographic) order, as
/// integer coordinates in the lattice's own basis. `kissing` counts both
/// signs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShortVectorReport {
    pub bound: Rational,
    pub minimum: Option<Rational>,
    pub kissing: u64,
    pub vectors: Vec<(Vec<BigInt>, Rational)>,
    pub nodes: u64,
}

/// Result of a coset enumeration. Vectors are listed singly (a coset is not
/// stable under negation): coordinates x such that shift + x. basis attains
/// the stated norm.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CosetReport {
    pub bound: Rational,
    pub minimum: Option<Rational>,
    pub count_at_minimum: u64,
    pub vectors: Vec<(Vec<BigInt>, Rational)>,
    pub nodes: u64,
}

/// Quadratic completion of a positive definite Gram matrix:
/// Q(y) = sum_i q[i] * (y_i + sum_{j>i} r[i][j] y_j)^2.
struct Completion {
    n: usize,
    q: Vec<Rational>,
    r: Vec<Vec<Rational>>,
}

fn complete(gram: &RatMatrix) -> Result<Completion> {
    let n = gram.rows();
    let mut a: Vec<Vec<Rational>> = (0..n).map(|i| gram.row_vec(i)).collect();
    let mut q = vec![Rational::zero(); n];
    let mut r = vec![vec![Rational::zero(); n]; n];
    for i in 0..n {
        let qi = a[i][i].clone();
        if !qi.is_positive() {
            return Err(Error::NotPositiveDefinite(
                "Gram matrix fails the definiteness pivot test".into(),
            ));
        }
        for j in i + 1..n {
            r[i][j] = &a[i][j] / &qi;
        }
        for k in i + 1..n {
            if a[i][k].is_zero() {
                continue;
            }
            for l in k..n {
                let t = &r[i][k] * &a[i][l];
                a[k][l] -= t;
            }
        }
        for k in i + 1..n {
            for l in i + 1..k {
                a[k][l] = a[l][k].clone();
            }
        }
        q[i] = qi;
    }
    Ok(Completion { n, q, r })
}

/// Completion with every denominator cleared into the single scale M:
/// Q(x) * M = sum_i t[i] * (de[i]*x_i + base_i)^2 / (scale bookkeeping),
/// where base_i is integer data derived from the later coordinates and the
/// coset shift.
struct ClearedWalkData {
    n: usize,
    /// Shift coordinate denominators cleared: s_i = s_int[i] / e.
    e: BigInt,
    s_int: Vec<BigInt>,
    /// Per-level denominator of the completion row: r[i][j] = r_int[i][j] / d[i].
    d: Vec<BigInt>,
    r_int: Vec<Vec<BigInt>>,
    /// de[i] = d[i] * e: the per-trial step of the deviation numerator.
    de: Vec<BigInt>,
    /// t[i] = q_i * m / (d[i]^2 e^2), integral by construction of m.
    t: Vec<BigInt>,
    /// Global denominator: every admissibility test compares against
    /// bound * m exactly.
    m: BigInt,
}

fn clear_walk_data(
    comp: &Completion,
    shift: Option<&[Rational]>,
    bound: &Rational,
) -> ClearedWalkData {
    let n = comp.n;
    let mut e = BigInt::one();
    if let Some(s) = shift {
        for v in s {
            e = e.lcm(v.denom());
        }
    }
    let s_int: Vec<BigInt> = match shift {
        Some(s) => s
            .iter()
            .map(|v| (v * Rational::from_integer(e.clone())).to_integer())
            .collect(),
        None => vec![BigInt::zero(); n],
    };
    let mut d = Vec::with_capacity(n);
    let mut r_int = Vec::with_capacity(n);
    for i in 0..n {
        let mut di = BigInt::one();
        for j in i + 1..n {
            di = di.lcm(comp.r[i][j].denom());
        }
        let row: Vec<BigInt> = (0..n)
            .map(|j| {
                if j > i {
                    (&comp.r[i][j] * Rational::from_integer(di.clone())).to_integer()
                } else {
                    BigInt::zero()
                }
            })
            .collect();
        d.push(di);
        r_int.push(row);
    }
    let e2 = &e * &e;
    let mut m = BigInt::one();
    for i in 0..n {
        let need = comp.q[i].denom() * &d[i] * &d[i] * &e2;
        m = m.lcm(&need);
    }
    m = m.lcm(bound.denom());
    let t: Vec<BigInt> = (0..n)
        .map(|i| comp.q[i].numer() * (&m / (comp.q[i].denom() * &d[i] * &d[i] * &e2)))
        .collect();
    let de: Vec<BigInt> = (0..n).map(|i| &d[i] * &e).collect();
    ClearedWalkData {
        n,
        e,
        s_int,
        d,
        r_int,
        de,
        t,
        m,
    }
}

/// Nearest integer to n/d for d > 0, ties to the larger.
fn round_div(n: &BigInt, d: &BigInt) -> BigInt {
    let two_n = n * 2i32;
    let num = two_n + d;
    let den = d * 2i32;
    num.div_floor(&den)
}

enum Mode<'a> {
    /// Collect every admissible leaf.
    Collect(&'a mut Vec<(Vec<BigInt>, Rational)>),
    /// Tighten the bound at every admissible leaf; ends with the minimum.
    Shrink(&'a mut Option<(Vec<BigInt>, Rational)>),
    /// Stop at the first admissible leaf.
    First(&'a mut Option<(Vec<BigInt>, Rational)>),
}

struct Walker<'a> {
    data: &'a ClearedWalkData,
    has_shift: bool,
    /// bound * m; every comparison is exact at scale m.
    bound_m: BigInt,
    strict: bool,
    nodes: u64,
    budget: u64,
    /// y_big[j] = e * x_j + s_int[j] (the cleared coset coordinate).
    y_big: Vec<BigInt>,
    x: Vec<BigInt>,
}

impl<'a> Walker<'a> {
    fn admissible(&self, total: &BigInt) -> bool {
        if self.strict {
            total < &self.bound_m
        } else {
            total <= &self.bound_m
        }
    }

    fn spend(&mut self) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(Error::BudgetExhausted {
                nodes: self.nodes,
                budget: self.budget,
            });
        }
        Ok(())
    }

    /// Walk level i (levels descend from n-1 to 0), with `used` the exact
    /// scaled weight contributed by levels above i and `top_zero` true when
    /// every coordinate above i is zero (meaningful in the halving walk).
    fn walk(
        &mut self,
        mode: &mut Mode,
        i: usize,
        used: &BigInt,
        top_zero: bool,
    ) -> Result<ControlFlow<()>> {
        let mut c_i = BigInt::zero();
        for j in i + 1..self.data.n {
            let r = &self.data.r_int[i][j];
            if !r.is_zero() && !self.y_big[j].is_zero() {
                c_i += r * &self.y_big[j];
            }
        }
        // Deviation numerator at trial x: de[i]*x + base, over denominator
        // d[i]*e; term * m = t[i] * (de[i]*x + base)^2.
        let base = &self.data.d[i] * &self.data.s_int[i] + &c_i;
        let halving = !self.has_shift && top_zero;
        let start: BigInt = if halving {
            BigInt::zero()
        } else {
            round_div(&-&base, &self.data.de[i])
        };

        let step = self.data.de[i].clone();
        let t_i = self.data.t[i].clone();

        // Upward direction: x = start, start+1, ...
        let mut x = start.clone();
        let mut numer = &step * &start + &base;
        loop {
            self.spend()?;
            let term = &t_i * (&numer * &numer);
            let total = used + &term;
            if !self.admissible(&total) {
                break;
            }
            match self.step_into(mode, i, &x, &total, top_zero)? {
                ControlFlow::Break(()) => return Ok(ControlFlow::Break(())),
                ControlFlow::Continue(()) => {}
            }
            x += 1;
            numer += &step;
        }
        if !halving {
            // Downward direction: x = start-1, start-2, ...
            let mut x = &start - 1;
            let mut numer = &step * &x + &base;
            loop {
                self.spend()?;
                let term = &t_i * (&numer * &numer);
                let total = used + &term;
                if !self.admissible(&total) {
                    break;
                }
                match self.step_into(mode, i, &x, &total, top_zero)? {
                    ControlFlow::Break(()) => return Ok(ControlFlow::Break(())),
                    ControlFlow::Continue(()) => {}
                }
                x -= 1;
                numer -= &step;
            }
        }
        Ok(ControlFlow::Continue(()))
    }

    fn step_into(
        &mut self,
        mode: &mut Mode,
        i: usize,
        x: &BigInt,
        total: &BigInt,
        top_zero: bool,
    ) -> Result<ControlFlow<()>> {
        if i == 0 {
            let zero_leaf = !self.has_shift && top_zero && x.is_zero();
            if zero_leaf {
                return Ok(ControlFlow::Continue(()));
            }
            self.x[0] = x.clone();
            self.leaf(mode, total)
        } else {
            self.x[i] = x.clone();
            self.y_big[i] = &self.data.e * x + &self.data.s_int[i];
            let child_zero = top_zero && x.is_zero();
            self.walk(mode, i - 1, total, child_zero)
        }
    }

    fn leaf(&mut self, mode: &mut Mode, total: &BigInt) -> Result<ControlFlow<()>> {
        let norm = || Rational::new(total.clone(), self.data.m.clone());
        match mode {
            Mode::Collect(out) => {
                out.push((self.x.clone(), norm()));
                Ok(ControlFlow::Continue(()))
            }
            Mode::Shrink(best) => {
                **best = Some((self.x.clone(), norm()));
                self.bound_m = total.clone();
                self.strict = true;
                Ok(ControlFlow::Continue(()))
            }
            Mode::First(found) => {
                **found = Some((self.x.clone(), norm()));
                Ok(ControlFlow::Break(()))
            }
        }
    }
}

fn run_walk(
    comp: &Completion,
    shift: Option<&[Rational]>,
    bound: &Rational,
    strict: bool,
    budget: u64,
    mode: &mut Mode,
) -> Result<u64> {
    let n = comp.n;
    let data = clear_walk_data(comp, shift, bound);
    let bound_m = (bound * Rational::from_integer(data.m.clone())).to_integer();
    let mut w = Walker {
        data: &data,
        has_shift: shift.is_some(),
        bound_m,
        strict,
        nodes: 0,
        budget,
        y_big: vec![BigInt::zero(); n],
        x: vec![BigInt::zero(); n],
    };
    if n > 0 {
        let _ = w.walk(mode, n - 1, &BigInt::zero(), true)?;
    }
    Ok(w.nodes)
}

/// Map coordinates in the reduced basis back to the original basis and fix
/// the sign convention: first nonzero coordinate positive.
fn to_original_coords(x: &[BigInt], u: &IntMatrix) -> Vec<BigInt> {
    let n = x.len();
    let mut out = vec![BigInt::zero(); n];
    for k in 0..n {
        if x[k].is_zero() {
            continue;
        }
        for j in 0..n {
            out[j] += &x[k] * u.at(k, j);
        }
    }
    if let Some(first) = out.iter().find(|v| !v.is_zero()) {
        if first.is_negative() {
            for v in out.iter_mut() {
                let t = -v.clone();
                *v = t;
            }
        }
    }
    out
}

fn sort_vectors(vs: &mut [(Vec<BigInt>, Rational)]) {
    vs.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
}

/// All nonzero vectors of norm <= bound, one representative per +-pair, in
/// (norm, lex) order over coordinates in the lattice's own basis.
pub fn enumerate_short(
    l: &Lattice,
    bound: &Rational,
    opts: &EnumOptions,
) -> Result<ShortVectorReport> {
    if !bound.is_positive() {
        return Err(Error::Input("enumeration bound must be positive".into()));
    }
    if l.rank() == 0 {
        return Ok(ShortVectorReport {
            bound: bound.clone(),
            minimum: None,
            kissing: 0,
            vectors: Vec::new(),
            nodes: 0,
        });
    }
    let (red, u) = lll_reduce(l, &default_delta())?;
    let comp = complete(red.gram())?;
    let mut raw = Vec::new();
    let nodes = run_walk(
        &comp,
        None,
        bound,
        false,
        opts.budget,
        &mut Mode::Collect(&mut raw),
    )?;
    let mut vectors: Vec<(Vec<BigInt>, Rational)> = raw
        .into_iter()
        .map(|(x, norm)| (to_original_coords(&x, &u), norm))
        .collect();
    sort_vectors(&mut vectors);
    let minimum = vectors.first().map(|(_, n)| n.clone());
    let kissing = match &minimum {
        Some(m) => 2 * vectors.iter().take_while(|(_, n)| n == m).count() as u64,
        None => 0,
    };
    Ok(ShortVectorReport {
        bound: bound.clone(),
        minimum,
        kissing,
        vectors,
        nodes,
    })
}

/// The least nonzero norm, found by shrinking enumeration from the shortest
/// reduced basis vector.
pub fn minimum(l: &Lattice, opts: &EnumOptions) -> Result<Rational> {
    minimum_with_witness(l, opts).map(|(m, _)| m)
}

/// Minimum together with an attaining coordinate vector (original basis).
pub fn minimum_with_witness(l: &Lattice, opts: &EnumOptions) -> Result<(Rational, Vec<BigInt>)> {
    if l.rank() == 0 {
        return Err(Error::Input("the zero lattice has no minimum".into()));
    }
    let (red, u) = lll_reduce(l, &default_delta())?;
    let comp = complete(red.gram())?;
    let b0 = (0..red.rank())
        .map(|i| red.gram().at(i, i).clone())
        .min()
        .expect("positive rank");
    let mut best = None;
    let _ = run_walk(
        &comp,
        None,
        &b0,
        false,
        opts.budget,
        &mut Mode::Shrink(&mut best),
    )?;
    let (x, m) = best.expect("a shortest basis vector always qualifies");
    Ok((m, to_original_coords(&x, &u)))
}

/// Minimum and the number of vectors attaining it (both signs counted).
pub fn kissing_number(l: &Lattice, opts: &EnumOptions) -> Result<(Rational, u64)> {
    let m = minimum(l, opts)?;
    let report = enumerate_short(l, &m, opts)?;
    Ok((m, report.kissing))
}

/// True iff the lattice has a nonzero vector of norm strictly below `bound`.
/// Short-circuits on the first witness.
pub fn has_vector_below(l: &Lattice, bound: &Rational, opts: &EnumOptions) -> Result<bool> {
    if l.rank() == 0 || !bound.is_positive() {
        return Ok(false);
    }
    let (red, _) = lll_reduce(l, &default_delta())?;
    for i in 0..red.rank() {
        if red.gram().at(i, i) < bound {
            return Ok(true);
        }
    }
    let comp = complete(red.gram())?;
    let mut found = None;
    let _ = run_walk(
        &comp,
        None,
        bound,
        true,
        opts.budget,
        &mut Mode::First(&mut found),
    )?;
    Ok(found.is_some())
}

fn coset_shift_coords(
    l: &Lattice,
    shift: &[Rational],
) -> Result<(Vec<Rational>, IntMatrix, Lattice)> {
    let s = l
        .coords_of(shift)
        .ok_or_else(|| Error::Input("shift lies outside the rational span of the lattice".into()))?;
    if s.iter().all(is_integer) {
        return Err(Error::Input(
            "shift lies in the lattice; the coset is the lattice itself".into(),
        ));
    }
    let (red, u) = lll_reduce(l, &default_delta())?;
    // shift = s . basis = (s . u^{-1}) . (u . basis)
    let uinv = u.inverse_unimodular()?;
    let mut s_red = vec![Rational::zero(); s.len()];
    for j in 0..s.len() {
        let mut acc = Rational::zero();
        for k in 0..s.len() {
            if !s[k].is_zero() {
                acc += &s[k] * Rational::from_integer(uinv.at(k, j).clone());
            }
        }
        s_red[j] = acc;
    }
    Ok((s_red, u, red))
}

/// Least norm over the coset { shift + v : v in l }. The shift must lie in
/// the rational span of `l` but not in `l` itself.
pub fn coset_minimum(l: &Lattice, shift: &[Rational], opts: &EnumOptions) -> Result<Rational> {
    let (s_red, _, red) = coset_shift_coords(l, shift)?;
    let comp = complete(red.gram())?;
    // Seed the shrink with the cheap valid upper bound Q(y) at the rounded
    // center, y_i = s_i - round(s_i).
    let mut y = s_red.clone();
    for v in y.iter_mut() {
        let r = crate::rat::round_half_up(v);
        *v -= Rational::from_integer(r);
    }
    let mut b0 = Rational::zero();
    for i in 0..red.rank() {
        if y[i].is_zero() {
            continue;
        }
        for j in 0..red.rank() {
            if !y[j].is_zero() {
                b0 += &y[i] * red.gram().at(i, j) * &y[j];
            }
        }
    }
    assert!(
        b0.is_positive(),
        "coset shift validated as outside the lattice"
    );
    let mut best = None;
    let _ = run_walk(
        &comp,
        Some(&s_red),
        &b0,
        false,
        opts.budget,
        &mut Mode::Shrink(&mut best),
    )?;
    Ok(best.expect("seed leaf always admissible").1)
}

/// All coset vectors shift + x.basis with norm <= bound, listed singly in
/// (norm, lex) order; coordinates are in the lattice's own basis.
pub fn coset_short_vectors(
    l: &Lattice,
    shift: &[Rational],
    bound: &Rational,
    opts: &EnumOptions,
) -> Result<CosetReport> {
    if !bound.is_positive() {
        return Err(Error::Input("enumeration bound must be positive".into()));
    }
    let (s_red, u, red) = coset_shift_coords(l, shift)?;
    let comp = complete(red.gram())?;
    let mut raw = Vec::new();
    let nodes = run_walk(
        &comp,
        Some(&s_red),
        bound,
        false,
        opts.budget,
        &mut Mode::Collect(&mut raw),
    )?;
    // Map back without sign normalization: cosets are not negation-stable.
    let mut vectors: Vec<(Vec<BigInt>, Rational)> = raw
        .into_iter()
        .map(|(x, norm)| {
            let n = x.len();
            let mut out = vec![BigInt::zero(); n];
            for k in 0..n {
                if x[k].is_zero() {
                    continue;
                }
                for j in 0..n {
                    out[j] += &x[k] * u.at(k, j);
                }
            }
            (out, norm)
        })
        .collect();
    sort_vectors(&mut vectors);
    let minimum = vectors.first().map(|(_, n)| n.clone());
    let count_at_minimum = match &minimum {
        Some(m) => vectors.iter().take_while(|(_, n)| n == m).count() as u64,
        None => 0,
    };
    Ok(CosetReport {
        bound: bound.clone(),
        minimum,
        count_at_minimum,
        vectors,
        nodes,
    })
}

/// Vector counts per norm value up to `bound`, both signs counted, norm 0
/// excluded.
pub fn theta_prefix(
    l: &Lattice,
    bound: &Rational,
    opts: &EnumOptions,
) -> Result<Vec<(Rational, u64)>> {
    let report = enumerate_short(l, bound, opts)?;
    let mut out: Vec<(Rational, u64)> = Vec::new();
    for (_, norm) in &report.vectors {
        match out.last_mut() {
            Some((n, c)) if n == norm => *c += 2,
            _ => out.push((norm.clone(), 2)),
        }
    }
    Ok(out)
}

/// Evenness, unimodularity, and the extremal minimum all at once.
pub fn is_extremal_even_unimodular(l: &Lattice, opts: &EnumOptions) -> Result<bool> {
    if !l.is_even() || !l.is_unimodular() {
        return Ok(false);
    }
    let target = Rational::from_integer(BigInt::from(crate::lattice::extremal_bound(l.rank())));
    if has_vector_below(l, &target, opts)? {
        return Ok(false);
    }
    let m = minimum(l, opts)?;
    Ok(m == target)
}
