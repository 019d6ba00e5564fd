//! Text file formats: lattices, isometries, generator lists, Hermitian
//! matrices, and glue-search configurations.
//!
//! All formats are line based. Blank lines and lines starting with `#` are
//! ignored everywhere. Every file opens with a magic line naming the format
//! and its version and closes with `end`; nothing may follow the `end`.
//! Parsers are strict and fail with [`Error::Parse`] carrying the offending
//! line number. Emitters write the canonical form, so `parse(emit(x))`
//! reproduces `x` exactly.
//!
//! Matrices with fractional entries are written as integer numerators over a
//! single shared positive denominator. A lattice file shares one denominator
//! between the basis and the ambient form, which keeps fixtures diffable;
//! `form identity` abbreviates the exact identity form regardless of the
//! denominator in force.

use std::fmt::Write as _;
use std::path::Path;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::autotype::CyclotomicMatrix;
use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::mat::{IntMatrix, RatMatrix};
use crate::rat::Rational;
use crate::search::{Pinning, SearchConfig};
use crate::isom::Isometry;

/// Magic line of a lattice file.
pub const LATTICE_MAGIC: &str = "latt-lattice 1";
/// Magic line of a single-isometry file.
pub const ISOMETRY_MAGIC: &str = "latt-isometry 1";
/// Magic line of a generator-list file.
pub const GENERATORS_MAGIC: &str = "latt-generators 1";
/// Magic line of a Hermitian matrix file.
pub const HERMITIAN_MAGIC: &str = "latt-hermitian 1";
/// Magic line of a glue-search configuration file.
pub const CONFIG_MAGIC: &str = "latt-gluesearch-config 1";

fn perr(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Parse(format!("line {line}: {msg}"))
}

/// Cursor over the meaningful lines of a file, remembering original line
/// numbers for error messages.
struct Lines<'a> {
    lines: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        let lines = text
            .lines()
            .enumerate()
            .map(|(i, raw)| (i + 1, raw.trim()))
            .filter(|(_, s)| !s.is_empty() && !s.starts_with('#'))
            .collect();
        Lines { lines, pos: 0 }
    }

    fn next(&mut self) -> Result<(usize, &'a str)> {
        let item = self
            .lines
            .get(self.pos)
            .copied()
            .ok_or_else(|| Error::Parse("unexpected end of file".into()))?;
        self.pos += 1;
        Ok(item)
    }

    fn peek(&self) -> Option<(usize, &'a str)> {
        self.lines.get(self.pos).copied()
    }

    fn expect_magic(&mut self, magic: &str) -> Result<()> {
        let (no, line) = self.next()?;
        if line != magic {
            return Err(perr(no, format!("expected `{magic}`, found `{line}`")));
        }
        Ok(())
    }

    /// The closing `end` must be the last meaningful line of the file.
    fn expect_end_and_eof(&mut self) -> Result<()> {
        let (no, line) = self.next()?;
        if line != "end" {
            return Err(perr(no, format!("expected `end`, found `{line}`")));
        }
        if let Some((no, line)) = self.peek() {
            return Err(perr(no, format!("trailing content after `end`: `{line}`")));
        }
        Ok(())
    }
}

fn parse_big(no: usize, tok: &str) -> Result<BigInt> {
    tok.parse::<BigInt>()
        .map_err(|_| perr(no, format!("invalid integer `{tok}`")))
}

/// Parses `a` or `a/b` with a plain positive integer denominator.
pub fn parse_rational(tok: &str) -> Result<Rational> {
    match tok.split_once('/') {
        None => {
            let n = tok
                .parse::<BigInt>()
                .map_err(|_| Error::Parse(format!("invalid rational `{tok}`")))?;
            Ok(Rational::from_integer(n))
        }
        Some((ns, ds)) => {
            let n = ns
                .parse::<BigInt>()
                .map_err(|_| Error::Parse(format!("invalid rational `{tok}`")))?;
            if ds.is_empty() || ds.starts_with('+') || ds.starts_with('-') {
                return Err(Error::Parse(format!("invalid rational `{tok}`")));
            }
            let d = ds
                .parse::<BigInt>()
                .map_err(|_| Error::Parse(format!("invalid rational `{tok}`")))?;
            if d.is_zero() {
                return Err(Error::Parse(format!("zero denominator in `{tok}`")));
            }
            Ok(Rational::new(n, d))
        }
    }
}

/// Canonical token: `n` when integral, `n/d` with positive `d` otherwise.
pub fn format_rational(x: &Rational) -> String {
    x.to_string()
}

fn parse_keyword_line<'a>(lines: &mut Lines<'a>, key: &str) -> Result<(usize, &'a str)> {
    let (no, line) = lines.next()?;
    match line.split_once(char::is_whitespace) {
        Some((k, rest)) if k == key => Ok((no, rest.trim())),
        _ => Err(perr(no, format!("expected `{key} ...`, found `{line}`"))),
    }
}

fn parse_count(no: usize, tok: &str, what: &str) -> Result<usize> {
    let n = tok
        .parse::<usize>()
        .map_err(|_| perr(no, format!("invalid {what} `{tok}`")))?;
    Ok(n)
}

fn parse_int_row(lines: &mut Lines<'_>, cols: usize) -> Result<Vec<BigInt>> {
    let (no, line) = lines.next()?;
    let toks: Vec<&str> = line.split_whitespace().collect();
    if toks.len() != cols {
        return Err(perr(
            no,
            format!("expected {cols} entries, found {}", toks.len()),
        ));
    }
    toks.iter().map(|t| parse_big(no, t)).collect()
}

fn parse_rat_row(lines: &mut Lines<'_>, cols: Option<usize>) -> Result<Vec<Rational>> {
    let (no, line) = lines.next()?;
    let toks: Vec<&str> = line.split_whitespace().collect();
    if let Some(c) = cols {
        if toks.len() != c {
            return Err(perr(
                no,
                format!("expected {c} entries, found {}", toks.len()),
            ));
        }
    } else if toks.is_empty() {
        return Err(perr(no, "expected a nonempty row"));
    }
    toks.iter()
        .map(|t| parse_rational(t).map_err(|e| perr(no, e)))
        .collect()
}

/// Reads a lattice file. Layout, in order:
///
/// ```text
/// latt-lattice 1
/// label <text>          (optional)
/// dim <n>
/// ambient <m>
/// denominator <d>       (optional, default 1)
/// basis
/// <n rows of m integers>
/// form identity         (or `form` followed by m rows of m integers)
/// end
/// ```
///
/// Every numeric entry denotes `value / d`. `form identity` is the exact
/// identity, untouched by the denominator. The reconstructed data must pass
/// the usual lattice checks (independent rows, positive definite symmetric
/// form).
pub fn parse_lattice_file(text: &str) -> Result<Lattice> {
    let mut lines = Lines::new(text);
    lines.expect_magic(LATTICE_MAGIC)?;

    let mut label: Option<String> = None;
    if let Some((_, line)) = lines.peek() {
        if line == "label" || line.starts_with("label ") {
            let (no, rest) = parse_keyword_line(&mut lines, "label")?;
            if rest.is_empty() {
                return Err(perr(no, "label text is empty"));
            }
            label = Some(rest.to_string());
        }
    }

    let (no, tok) = parse_keyword_line(&mut lines, "dim")?;
    let n = parse_count(no, tok, "dimension")?;
    let (no, tok) = parse_keyword_line(&mut lines, "ambient")?;
    let m = parse_count(no, tok, "ambient dimension")?;
    if n == 0 || m == 0 {
        return Err(perr(no, "dimensions must be positive"));
    }

    let mut denom = BigInt::one();
    if let Some((_, line)) = lines.peek() {
        if line == "denominator" || line.starts_with("denominator ") {
            let (no, tok) = parse_keyword_line(&mut lines, "denominator")?;
            denom = parse_big(no, tok)?;
            if !denom.is_positive() {
                return Err(perr(no, format!("denominator `{tok}` must be positive")));
            }
        }
    }
    let dr = Rational::from_integer(denom);

    let (no, line) = lines.next()?;
    if line != "basis" {
        return Err(perr(no, format!("expected `basis`, found `{line}`")));
    }
    let mut basis_rows = Vec::new();
    for _ in 0..n {
        let row = parse_int_row(&mut lines, m)?;
        basis_rows.push(
            row.into_iter()
                .map(|x| Rational::from_integer(x) / &dr)
                .collect::<Vec<_>>(),
        );
    }

    let (no, line) = lines.next()?;
    let form = if line == "form identity" {
        RatMatrix::identity(m)
    } else if line == "form" {
        let mut rows = Vec::new();
        for _ in 0..m {
            let row = parse_int_row(&mut lines, m)?;
            rows.push(
                row.into_iter()
                    .map(|x| Rational::from_integer(x) / &dr)
                    .collect::<Vec<_>>(),
            );
        }
        RatMatrix::from_rows(rows)
    } else {
        return Err(perr(no, format!("expected `form`, found `{line}`")));
    };
    lines.expect_end_and_eof()?;

    let l = Lattice::new(form, RatMatrix::from_rows(basis_rows), label)?;
    Ok(l)
}

/// Writes the canonical lattice file for `l`: one shared denominator, the
/// identity form abbreviated, the denominator line always present.
pub fn emit_lattice_file(l: &Lattice) -> String {
    let n = l.rank();
    let m = l.ambient_dim();
    let identity_form = *l.ambient_form() == RatMatrix::identity(m);
    let mut denom = l.basis().denominator();
    if !identity_form {
        denom = denom.lcm(&l.ambient_form().denominator());
    }
    let dr = Rational::from_integer(denom.clone());

    let mut out = String::new();
    let _ = writeln!(out, "{LATTICE_MAGIC}");
    if let Some(label) = &l.label {
        let clean = label.split_whitespace().collect::<Vec<_>>().join(" ");
        if !clean.is_empty() {
            let _ = writeln!(out, "label {clean}");
        }
    }
    let _ = writeln!(out, "dim {n}");
    let _ = writeln!(out, "ambient {m}");
    let _ = writeln!(out, "denominator {denom}");
    let _ = writeln!(out, "basis");
    for i in 0..n {
        let row: Vec<String> = l.basis().row(i).iter().map(|x| scaled(x, &dr)).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    if identity_form {
        let _ = writeln!(out, "form identity");
    } else {
        let _ = writeln!(out, "form");
        for i in 0..m {
            let row: Vec<String> = l
                .ambient_form()
                .row(i)
                .iter()
                .map(|x| scaled(x, &dr))
                .collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
    }
    let _ = writeln!(out, "end");
    out
}

// x * d is integral by choice of d.
fn scaled(x: &Rational, d: &Rational) -> String {
    let v = x * d;
    debug_assert!(v.is_integer());
    v.to_integer().to_string()
}

/// Reads a square integer matrix:
///
/// ```text
/// latt-isometry 1
/// dim <n>
/// matrix
/// <n rows of n integers>
/// end
/// ```
///
/// The matrix is not checked against any lattice here; pair it with one and
/// validate through the isometry constructors.
pub fn parse_isometry_file(text: &str) -> Result<IntMatrix> {
    let mut lines = Lines::new(text);
    lines.expect_magic(ISOMETRY_MAGIC)?;
    let (no, tok) = parse_keyword_line(&mut lines, "dim")?;
    let n = parse_count(no, tok, "dimension")?;
    if n == 0 {
        return Err(perr(no, "dimension must be positive"));
    }
    let m = parse_matrix_block(&mut lines, n)?;
    lines.expect_end_and_eof()?;
    Ok(m)
}

/// Canonical form of [`parse_isometry_file`].
pub fn emit_isometry_file(m: &IntMatrix) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{ISOMETRY_MAGIC}");
    let _ = writeln!(out, "dim {}", m.rows());
    emit_matrix_block(&mut out, m);
    let _ = writeln!(out, "end");
    out
}

fn parse_matrix_block(lines: &mut Lines<'_>, n: usize) -> Result<IntMatrix> {
    let (no, line) = lines.next()?;
    if line != "matrix" {
        return Err(perr(no, format!("expected `matrix`, found `{line}`")));
    }
    let mut data = Vec::new();
    for _ in 0..n {
        data.extend(parse_int_row(lines, n)?);
    }
    Ok(IntMatrix::new(n, n, data))
}

fn emit_matrix_block(out: &mut String, m: &IntMatrix) {
    let _ = writeln!(out, "matrix");
    for i in 0..m.rows() {
        let row: Vec<String> = m.row(i).iter().map(|x| x.to_string()).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
}

/// Reads a list of square integer matrices of a common dimension:
///
/// ```text
/// latt-generators 1
/// dim <n>
/// count <k>
/// matrix            (k times)
/// <n rows of n integers>
/// end
/// ```
pub fn parse_generators_file(text: &str) -> Result<Vec<IntMatrix>> {
    let mut lines = Lines::new(text);
    lines.expect_magic(GENERATORS_MAGIC)?;
    let (no, tok) = parse_keyword_line(&mut lines, "dim")?;
    let n = parse_count(no, tok, "dimension")?;
    if n == 0 {
        return Err(perr(no, "dimension must be positive"));
    }
    let (no, tok) = parse_keyword_line(&mut lines, "count")?;
    let k = parse_count(no, tok, "count")?;
    let mut gens = Vec::new();
    for _ in 0..k {
        gens.push(parse_matrix_block(&mut lines, n)?);
    }
    lines.expect_end_and_eof()?;
    Ok(gens)
}

/// Canonical form of [`parse_generators_file`]. Empty lists need an explicit
/// dimension to stay parseable.
pub fn emit_generators_file(dim: usize, gens: &[IntMatrix]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{GENERATORS_MAGIC}");
    let _ = writeln!(out, "dim {dim}");
    let _ = writeln!(out, "count {}", gens.len());
    for g in gens {
        emit_matrix_block(&mut out, g);
    }
    let _ = writeln!(out, "end");
    out
}

/// Reads a Hermitian matrix over the cyclotomic integers of prime order p:
///
/// ```text
/// latt-hermitian 1
/// p <prime>
/// size <s>
/// entries
/// <s*s lines of p-1 integers>
/// end
/// ```
///
/// Entry lines run row major; each carries the coefficients of one matrix
/// entry on the power basis 1, z, ..., z^(p-2). The Hermitian symmetry
/// check happens in the matrix constructor.
pub fn parse_hermitian_file(text: &str) -> Result<CyclotomicMatrix> {
    let mut lines = Lines::new(text);
    lines.expect_magic(HERMITIAN_MAGIC)?;
    let (no, tok) = parse_keyword_line(&mut lines, "p")?;
    let p = tok
        .parse::<u64>()
        .map_err(|_| perr(no, format!("invalid prime `{tok}`")))?;
    if p < 2 {
        return Err(perr(no, format!("invalid prime `{tok}`")));
    }
    let (no, tok) = parse_keyword_line(&mut lines, "size")?;
    let s = parse_count(no, tok, "size")?;
    if s == 0 {
        return Err(perr(no, "size must be positive"));
    }
    let (no, line) = lines.next()?;
    if line != "entries" {
        return Err(perr(no, format!("expected `entries`, found `{line}`")));
    }
    let width = (p - 1) as usize;
    let mut entries = Vec::new();
    for _ in 0..s * s {
        entries.push(parse_int_row(&mut lines, width)?);
    }
    lines.expect_end_and_eof()?;
    CyclotomicMatrix::new(p, s, entries)
}

/// Canonical form of [`parse_hermitian_file`].
pub fn emit_hermitian_file(h: &CyclotomicMatrix) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{HERMITIAN_MAGIC}");
    let _ = writeln!(out, "p {}", h.p());
    let _ = writeln!(out, "size {}", h.size());
    let _ = writeln!(out, "entries");
    for i in 0..h.size() {
        for j in 0..h.size() {
            let row: Vec<String> = h.entry(i, j).iter().map(|x| x.to_string()).collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
    }
    let _ = writeln!(out, "end");
    out
}

/// A glue-search configuration as read from disk, before any file it points
/// at has been opened. Paths are kept verbatim and resolved against the
/// configuration file's directory by [`build_search_config`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SearchConfigFile {
    pub p: u64,
    pub glue_rank: usize,
    pub target: Rational,
    pub left: String,
    pub right: String,
    /// Rows of ambient coordinates for the frame vectors, in the left
    /// summand's ambient space.
    pub frame: Vec<Vec<Rational>>,
    pub gram: Vec<Vec<Rational>>,
    pub pinning: Option<Pinning>,
    pub reorder: Option<bool>,
    pub stabilizers: Option<bool>,
    pub require_extremal: Option<bool>,
    pub symmetry: Option<String>,
    pub compare: Option<String>,
}

/// Reads a glue-search configuration:
///
/// ```text
/// latt-gluesearch-config 1
/// p <prime>
/// rank <s>
/// target <rational>
/// left <path>
/// right <path>
/// frame
/// <s rows of rationals, one frame vector each>
/// gram
/// <s rows of s rationals>
/// pinning try-all|pin-first     (optional, any order from here)
/// reorder on|off                (optional)
/// stabilizers on|off            (optional)
/// require-extremal on|off       (optional)
/// symmetry <path>               (optional)
/// compare <path>                (optional)
/// end
/// ```
///
/// Frame rows must agree in width; the width itself is checked against the
/// left summand only once the lattices are loaded.
pub fn parse_search_config(text: &str) -> Result<SearchConfigFile> {
    let mut lines = Lines::new(text);
    lines.expect_magic(CONFIG_MAGIC)?;
    let (no, tok) = parse_keyword_line(&mut lines, "p")?;
    let p = tok
        .parse::<u64>()
        .map_err(|_| perr(no, format!("invalid prime `{tok}`")))?;
    let (no, tok) = parse_keyword_line(&mut lines, "rank")?;
    let glue_rank = parse_count(no, tok, "rank")?;
    if glue_rank == 0 {
        return Err(perr(no, "rank must be positive"));
    }
    let (no, tok) = parse_keyword_line(&mut lines, "target")?;
    let target = parse_rational(tok).map_err(|e| perr(no, e))?;
    let (no, left) = parse_keyword_line(&mut lines, "left")?;
    if left.is_empty() {
        return Err(perr(no, "left path is empty"));
    }
    let (no, right) = parse_keyword_line(&mut lines, "right")?;
    if right.is_empty() {
        return Err(perr(no, "right path is empty"));
    }

    let (no, line) = lines.next()?;
    if line != "frame" {
        return Err(perr(no, format!("expected `frame`, found `{line}`")));
    }
    let mut frame = Vec::new();
    let first = parse_rat_row(&mut lines, None)?;
    let width = first.len();
    frame.push(first);
    for _ in 1..glue_rank {
        frame.push(parse_rat_row(&mut lines, Some(width))?);
    }

    let (no, line) = lines.next()?;
    if line != "gram" {
        return Err(perr(no, format!("expected `gram`, found `{line}`")));
    }
    let mut gram = Vec::new();
    for _ in 0..glue_rank {
        gram.push(parse_rat_row(&mut lines, Some(glue_rank))?);
    }

    let mut cfg = SearchConfigFile {
        p,
        glue_rank,
        target,
        left: left.to_string(),
        right: right.to_string(),
        frame,
        gram,
        pinning: None,
        reorder: None,
        stabilizers: None,
        require_extremal: None,
        symmetry: None,
        compare: None,
    };

    loop {
        let (no, line) = lines.next()?;
        if line == "end" {
            if let Some((no, line)) = lines.peek() {
                return Err(perr(no, format!("trailing content after `end`: `{line}`")));
            }
            return Ok(cfg);
        }
        let (key, rest) = line
            .split_once(char::is_whitespace)
            .map(|(k, r)| (k, r.trim()))
            .ok_or_else(|| perr(no, format!("expected `end`, found `{line}`")))?;
        let dup = |name: &str| perr(no, format!("duplicate `{name}`"));
        match key {
            "pinning" => {
                if cfg.pinning.is_some() {
                    return Err(dup(key));
                }
                cfg.pinning = Some(match rest {
                    "try-all" => Pinning::TryAll,
                    "pin-first" => Pinning::PinFirst,
                    _ => return Err(perr(no, format!("invalid pinning `{rest}`"))),
                });
            }
            "reorder" | "stabilizers" | "require-extremal" => {
                let val = match rest {
                    "on" => true,
                    "off" => false,
                    _ => return Err(perr(no, format!("invalid switch `{rest}`"))),
                };
                let slot = match key {
                    "reorder" => &mut cfg.reorder,
                    "stabilizers" => &mut cfg.stabilizers,
                    _ => &mut cfg.require_extremal,
                };
                if slot.is_some() {
                    return Err(dup(key));
                }
                *slot = Some(val);
            }
            "symmetry" => {
                if cfg.symmetry.is_some() {
                    return Err(dup(key));
                }
                if rest.is_empty() {
                    return Err(perr(no, "symmetry path is empty"));
                }
                cfg.symmetry = Some(rest.to_string());
            }
            "compare" => {
                if cfg.compare.is_some() {
                    return Err(dup(key));
                }
                if rest.is_empty() {
                    return Err(perr(no, "compare path is empty"));
                }
                cfg.compare = Some(rest.to_string());
            }
            _ => return Err(perr(no, format!("unknown key `{key}`"))),
        }
    }
}

/// Canonical form of [`parse_search_config`]. Optional keys appear only when
/// set, in a fixed order.
pub fn emit_search_config(cfg: &SearchConfigFile) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{CONFIG_MAGIC}");
    let _ = writeln!(out, "p {}", cfg.p);
    let _ = writeln!(out, "rank {}", cfg.glue_rank);
    let _ = writeln!(out, "target {}", format_rational(&cfg.target));
    let _ = writeln!(out, "left {}", cfg.left);
    let _ = writeln!(out, "right {}", cfg.right);
    let _ = writeln!(out, "frame");
    for row in &cfg.frame {
        let toks: Vec<String> = row.iter().map(format_rational).collect();
        let _ = writeln!(out, "{}", toks.join(" "));
    }
    let _ = writeln!(out, "gram");
    for row in &cfg.gram {
        let toks: Vec<String> = row.iter().map(format_rational).collect();
        let _ = writeln!(out, "{}", toks.join(" "));
    }
    if let Some(p) = &cfg.pinning {
        let name = match p {
            Pinning::TryAll => "try-all",
            Pinning::PinFirst => "pin-first",
        };
        let _ = writeln!(out, "pinning {name}");
    }
    for (key, val) in [
        ("reorder", cfg.reorder),
        ("stabilizers", cfg.stabilizers),
        ("require-extremal", cfg.require_extremal),
    ] {
        if let Some(v) = val {
            let _ = writeln!(out, "{key} {}", if v { "on" } else { "off" });
        }
    }
    if let Some(s) = &cfg.symmetry {
        let _ = writeln!(out, "symmetry {s}");
    }
    if let Some(c) = &cfg.compare {
        let _ = writeln!(out, "compare {c}");
    }
    let _ = writeln!(out, "end");
    out
}

/// Reads and parses a lattice file from disk.
pub fn load_lattice(path: &Path) -> Result<Lattice> {
    let text = std::fs::read_to_string(path)?;
    parse_lattice_file(&text).map_err(|e| prefix_path(path, e))
}

fn prefix_path(path: &Path, e: Error) -> Error {
    match e {
        Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
        other => other,
    }
}

/// Resolves the paths of a parsed configuration against `base` (the
/// directory of the configuration file), loads the lattices and the optional
/// symmetry generators, and assembles a validated [`SearchConfig`]. Returns
/// the comparison lattice alongside when one is named.
pub fn build_search_config(
    cfg: &SearchConfigFile,
    base: &Path,
) -> Result<(SearchConfig, Option<Lattice>)> {
    let resolve = |rel: &str| base.join(rel);
    let left = load_lattice(&resolve(&cfg.left))?;
    let right = load_lattice(&resolve(&cfg.right))?;
    let frame = cfg.frame.clone();
    let gram = RatMatrix::from_rows(cfg.gram.clone());
    let mut sc = SearchConfig::new(
        left,
        right.clone(),
        cfg.p,
        cfg.glue_rank,
        cfg.target.clone(),
        frame,
        gram,
    )?;
    if let Some(p) = &cfg.pinning {
        sc = sc.with_pinning(p.clone());
    }
    if let Some(v) = cfg.reorder {
        sc = sc.with_reorder_smallest_first(v);
    }
    if let Some(v) = cfg.stabilizers {
        sc = sc.with_stabilizers(v);
    }
    if let Some(v) = cfg.require_extremal {
        sc = sc.with_require_extremal(v)?;
    }
    if let Some(rel) = &cfg.symmetry {
        let path = resolve(rel);
        let text = std::fs::read_to_string(&path)?;
        let mats = parse_generators_file(&text).map_err(|e| prefix_path(&path, e))?;
        let gens = mats
            .into_iter()
            .map(|m| Isometry::automorphism(&right, m))
            .collect::<Result<Vec<_>>>()?;
        sc = sc.with_right_symmetry(gens)?;
    }
    let compare = match &cfg.compare {
        Some(rel) => Some(load_lattice(&resolve(rel))?),
        None => None,
    };
    Ok((sc, compare))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat;
    use crate::stdlat::{an, e8};

    fn roundtrip_lattice(l: &Lattice) {
        let text = emit_lattice_file(l);
        let back = parse_lattice_file(&text).unwrap();
        assert_eq!(back.basis(), l.basis());
        assert_eq!(back.ambient_form(), l.ambient_form());
        assert_eq!(back.label, l.label);
        assert_eq!(emit_lattice_file(&back), text);
    }

    #[test]
    fn lattice_roundtrips() {
        roundtrip_lattice(&Lattice::zn(3));
        roundtrip_lattice(&e8());
        roundtrip_lattice(&an(4).dual());
        let gram = RatMatrix::from_i64(2, 2, &[2, -1, -1, 2]);
        roundtrip_lattice(&Lattice::from_gram(gram).unwrap().with_label("a2 by gram"));
        // Fractional basis and fractional form share one denominator.
        let form = RatMatrix::from_rows(vec![
            vec![rat(3, 2), rat(0, 1)],
            vec![rat(0, 1), rat(5, 3)],
        ]);
        let basis = RatMatrix::from_rows(vec![vec![rat(1, 5), rat(0, 1)], vec![rat(1, 1), rat(7, 1)]]);
        roundtrip_lattice(&Lattice::new(form, basis, None).unwrap());
    }

    #[test]
    fn lattice_file_fixed_point_text() {
        let text = emit_lattice_file(&an(2));
        assert_eq!(
            text,
            "latt-lattice 1\nlabel A2\ndim 2\nambient 2\ndenominator 1\nbasis\n1 0\n0 1\nform\n2 -1\n-1 2\nend\n"
        );
    }

    #[test]
    fn lattice_parser_accepts_comments_and_blanks() {
        let text = "\n# a comment\nlatt-lattice 1\n\ndim 1\nambient 1\n# interior\nbasis\n2\nform identity\nend\n\n# trailing comment\n";
        let l = parse_lattice_file(text).unwrap();
        assert_eq!(l.gram(), &RatMatrix::from_i64(1, 1, &[4]));
        assert_eq!(l.label, None);
    }

    #[test]
    fn lattice_parser_rejects_malformed() {
        let cases: &[&str] = &[
            "",
            "latt-lattice 2\ndim 1\nambient 1\nbasis\n1\nform identity\nend\n",
            "latt-lattice 1\ndim 1\nambient 1\nbasis\n1\nform identity\n",
            "latt-lattice 1\ndim 1\nambient 1\nbasis\n1\nform identity\nend\nextra\n",
            "latt-lattice 1\ndim 0\nambient 1\nbasis\nform identity\nend\n",
            "latt-lattice 1\ndim 1\nambient 1\nbasis\n1 2\nform identity\nend\n",
            "latt-lattice 1\ndim 1\nambient 1\nbasis\nx\nform identity\nend\n",
            "latt-lattice 1\ndim 1\nambient 1\ndenominator 0\nbasis\n1\nform identity\nend\n",
            "latt-lattice 1\ndim 1\nambient 1\ndenominator -3\nbasis\n1\nform identity\nend\n",
            "latt-lattice 1\nlabel\ndim 1\nambient 1\nbasis\n1\nform identity\nend\n",
            "latt-lattice 1\ndim 2\nambient 1\nbasis\n1\n1\nform identity\nend\n",
            "latt-lattice 1\ndim 1\nambient 2\nbasis\n1 0\nform\n1 0\n0 -1\nend\n",
        ];
        for text in cases {
            let got = parse_lattice_file(text);
            assert!(got.is_err(), "accepted: {text:?}");
        }
        // Dependent rows fail the lattice checks, not the parser.
        let dep = "latt-lattice 1\ndim 2\nambient 2\nbasis\n1 0\n2 0\nform identity\nend\n";
        assert!(matches!(
            parse_lattice_file(dep),
            Err(Error::RankDeficient(_))
        ));
    }

    #[test]
    fn denominator_clears_basis_and_form_together() {
        let text = "latt-lattice 1\ndim 1\nambient 1\ndenominator 5\nbasis\n5\nform\n30\nend\n";
        let l = parse_lattice_file(text).unwrap();
        assert_eq!(l.basis().at(0, 0), &rat(1, 1));
        assert_eq!(l.ambient_form().at(0, 0), &rat(6, 1));
        // `form identity` ignores the denominator.
        let text = "latt-lattice 1\ndim 1\nambient 1\ndenominator 5\nbasis\n5\nform identity\nend\n";
        let l = parse_lattice_file(text).unwrap();
        assert_eq!(l.ambient_form().at(0, 0), &rat(1, 1));
    }

    #[test]
    fn isometry_and_generators_roundtrip() {
        let m = IntMatrix::from_i64(2, 2, &[0, 1, -1, -1]);
        let text = emit_isometry_file(&m);
        assert_eq!(parse_isometry_file(&text).unwrap(), m);

        let gens = vec![m.clone(), IntMatrix::identity(2)];
        let text = emit_generators_file(2, &gens);
        assert_eq!(parse_generators_file(&text).unwrap(), gens);

        let empty = emit_generators_file(3, &[]);
        assert_eq!(parse_generators_file(&empty).unwrap(), Vec::<IntMatrix>::new());
    }

    #[test]
    fn isometry_parser_rejects_malformed() {
        for text in [
            "latt-isometry 1\ndim 2\nmatrix\n1 0\nend\n",
            "latt-isometry 1\ndim 2\nmatrix\n1 0\n0 1\n",
            "latt-isometry 1\ndim 0\nmatrix\nend\n",
            "latt-generators 1\ndim 2\nmatrix\n1 0\n0 1\nend\n",
        ] {
            assert!(parse_isometry_file(text).is_err(), "accepted: {text:?}");
        }
        assert!(parse_generators_file("latt-generators 1\ndim 2\ncount 2\nmatrix\n1 0\n0 1\nend\n").is_err());
    }

    #[test]
    fn hermitian_roundtrip_and_rejection() {
        // Off-diagonal pair z and its conjugate z^4 = -1 - z - z^2 - z^3.
        let entries = vec![
            vec![2.into(), 0.into(), 0.into(), 0.into()],
            vec![0.into(), 1.into(), 0.into(), 0.into()],
            vec![(-1).into(), (-1).into(), (-1).into(), (-1).into()],
            vec![3.into(), 0.into(), 0.into(), 0.into()],
        ];
        let h = CyclotomicMatrix::new(5, 2, entries).unwrap();
        let text = emit_hermitian_file(&h);
        let back = parse_hermitian_file(&text).unwrap();
        assert_eq!(emit_hermitian_file(&back), text);
        assert_eq!(back.entry(0, 1), h.entry(0, 1));

        for text in [
            "latt-hermitian 1\np 4\nsize 1\nentries\n1 1 1\nend\n",
            "latt-hermitian 1\np 5\nsize 1\nentries\n1 0 0\nend\n",
            "latt-hermitian 1\np 5\nsize 1\nentries\nend\n",
            // Not Hermitian: off-diagonal pair fails the bar symmetry.
            "latt-hermitian 1\np 3\nsize 2\nentries\n1 0\n1 0\n0 1\n1 0\nend\n",
        ] {
            assert!(parse_hermitian_file(text).is_err(), "accepted: {text:?}");
        }
    }

    #[test]
    fn rational_tokens() {
        assert_eq!(parse_rational("3").unwrap(), rat(3, 1));
        assert_eq!(parse_rational("-8/6").unwrap(), rat(-4, 3));
        assert_eq!(format_rational(&rat(-4, 3)), "-4/3");
        assert_eq!(format_rational(&rat(5, 1)), "5");
        for bad in ["", "/", "1/", "/2", "1/0", "1/-2", "1/+2", "a", "1.5", "2/4x"] {
            assert!(parse_rational(bad).is_err(), "accepted: {bad:?}");
        }
    }

    #[test]
    fn search_config_roundtrip_and_build() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("a4.lat"), emit_lattice_file(&an(4))).unwrap();
        std::fs::write(dir.path().join("e8.lat"), emit_lattice_file(&e8())).unwrap();

        let a4 = an(4);
        let dual_min = a4.dual().basis().row_vec(0);
        let coset = crate::enumerate::coset_short_vectors(
            &a4,
            &dual_min,
            &crate::enumerate::coset_minimum(&a4, &dual_min, &Default::default()).unwrap(),
            &Default::default(),
        )
        .unwrap();
        let (x, _) = &coset.vectors[0];
        let xr: Vec<Rational> = x.iter().map(|c| Rational::from(c.clone())).collect();
        let off = a4.vector_from_coords(&xr);
        let frame_row: Vec<Rational> = dual_min
            .iter()
            .zip(off.iter())
            .map(|(a, b)| a + b)
            .collect();
        let gm = a4.norm(&frame_row);

        let cfg = SearchConfigFile {
            p: 5,
            glue_rank: 1,
            target: rat(2, 1),
            left: "a4.lat".into(),
            right: "a4.lat".into(),
            frame: vec![frame_row],
            gram: vec![vec![gm]],
            pinning: Some(Pinning::TryAll),
            reorder: Some(false),
            stabilizers: Some(true),
            require_extremal: None,
            symmetry: None,
            compare: Some("e8.lat".into()),
        };
        let text = emit_search_config(&cfg);
        let back = parse_search_config(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(emit_search_config(&back), text);

        let (sc, compare) = build_search_config(&back, dir.path()).unwrap();
        assert_eq!(sc.p(), 5);
        assert_eq!(sc.glue_rank(), 1);
        assert_eq!(sc.target_min(), &rat(2, 1));
        assert_eq!(compare.unwrap().label.as_deref(), Some("E8"));
    }

    #[test]
    fn search_config_rejects_malformed() {
        let ok = "latt-gluesearch-config 1\np 5\nrank 1\ntarget 2\nleft a.lat\nright b.lat\nframe\n1/5 0\ngram\n8/5\nend\n";
        assert!(parse_search_config(ok).is_ok());
        for text in [
            // Wrong magic.
            "latt-gluesearch-config 2\np 5\nrank 1\ntarget 2\nleft a\nright b\nframe\n1\ngram\n2\nend\n",
            // Rank zero.
            "latt-gluesearch-config 1\np 5\nrank 0\ntarget 2\nleft a\nright b\nframe\ngram\nend\n",
            // Ragged frame rows.
            "latt-gluesearch-config 1\np 5\nrank 2\ntarget 2\nleft a\nright b\nframe\n1 0\n1\ngram\n2 0\n0 2\nend\n",
            // Gram row too short.
            "latt-gluesearch-config 1\np 5\nrank 2\ntarget 2\nleft a\nright b\nframe\n1 0\n0 1\ngram\n2\n0 2\nend\n",
            // Unknown trailing key.
            "latt-gluesearch-config 1\np 5\nrank 1\ntarget 2\nleft a\nright b\nframe\n1\ngram\n2\nbudget 7\nend\n",
            // Duplicate switch.
            "latt-gluesearch-config 1\np 5\nrank 1\ntarget 2\nleft a\nright b\nframe\n1\ngram\n2\nreorder on\nreorder off\nend\n",
            // Bad switch value.
            "latt-gluesearch-config 1\np 5\nrank 1\ntarget 2\nleft a\nright b\nframe\n1\ngram\n2\nstabilizers maybe\nend\n",
            // Missing end.
            "latt-gluesearch-config 1\np 5\nrank 1\ntarget 2\nleft a\nright b\nframe\n1\ngram\n2\n",
        ] {
            assert!(parse_search_config(text).is_err(), "accepted: {text:?}");
        }
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let text = "latt-lattice 1\ndim 1\nambient 1\nbasis\nnope\nform identity\nend\n";
        match parse_lattice_file(text) {
            Err(Error::Parse(msg)) => assert!(msg.contains("line 5"), "message: {msg}"),
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}
