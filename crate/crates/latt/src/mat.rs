//! Exact matrices: rational matrices for forms and bases, integer matrices
//! for transforms, plus the echelon machinery (HNF, SNF, kernels) everything
//! else is built on.
//!
//! Row convention throughout the crate: lattice vectors are rows, a basis is
//! a stack of row vectors, and maps act by right multiplication `x -> x * A`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::rat::{is_integer, Rational};

/// Dense row-major matrix of exact rationals.
#[derive(Clone, PartialEq, Eq)]
pub struct RatMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Rational>,
}

impl std::fmt::Debug for RatMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "RatMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols)
                .map(|j| crate::rat::format_rational(self.at(i, j)))
                .collect();
            writeln!(f, "  {}", row.join(" "))?;
        }
        write!(f, "]")
    }
}

impl RatMatrix {
    /// A `rows x cols` matrix from a row-major entry list. Zero row or
    /// column counts are allowed (empty bases of rank-0 lattices).
    pub fn new(rows: usize, cols: usize, data: Vec<Rational>) -> Self {
        assert_eq!(data.len(), rows * cols, "entry count mismatch");
        RatMatrix { rows, cols, data }
    }

    pub fn zero(rows: usize, cols: usize) -> Self {
        RatMatrix::new(rows, cols, vec![Rational::zero(); rows * cols])
    }

    pub fn identity(n: usize) -> Self {
        let mut m = RatMatrix::zero(n, n);
        for i in 0..n {
            *m.at_mut(i, i) = Rational::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        for row in &rows {
            assert_eq!(row.len(), c, "ragged rows");
        }
        RatMatrix::new(r, c, rows.into_iter().flatten().collect())
    }

    pub fn from_i64(rows: usize, cols: usize, entries: &[i64]) -> Self {
        RatMatrix::new(
            rows,
            cols,
            entries.iter().map(|&n| crate::rat::rat_i(n)).collect(),
        )
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn at(&self, i: usize, j: usize) -> &Rational {
        &self.data[i * self.cols + j]
    }

    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut Rational {
        &mut self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[Rational] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_vec(&self, i: usize) -> Vec<Rational> {
        self.row(i).to_vec()
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[Rational]> {
        (0..self.rows).map(move |i| self.row(i))
    }

    pub fn transpose(&self) -> RatMatrix {
        let mut t = RatMatrix::zero(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                *t.at_mut(j, i) = self.at(i, j).clone();
            }
        }
        t
    }

    pub fn mul(&self, other: &RatMatrix) -> RatMatrix {
        assert_eq!(self.cols, other.rows, "matrix product shape mismatch");
        let mut out = RatMatrix::zero(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.at(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.at(k, j);
                    if !b.is_zero() {
                        *out.at_mut(i, j) += a * b;
                    }
                }
            }
        }
        out
    }

    pub fn add(&self, other: &RatMatrix) -> RatMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        RatMatrix::new(self.rows, self.cols, data)
    }

    pub fn scale(&self, c: &Rational) -> RatMatrix {
        RatMatrix::new(self.rows, self.cols, self.data.iter().map(|x| x * c).collect())
    }

    pub fn is_symmetric(&self) -> bool {
        if self.rows != self.cols {
            return false;
        }
        for i in 0..self.rows {
            for j in 0..i {
                if self.at(i, j) != self.at(j, i) {
                    return false;
                }
            }
        }
        true
    }

    pub fn is_integral(&self) -> bool {
        self.data.iter().all(is_integer)
    }

    /// Common positive denominator: least `d` with `d * self` integral.
    pub fn denominator(&self) -> BigInt {
        let mut d = BigInt::one();
        for x in &self.data {
            d = d.lcm(x.denom());
        }
        d
    }

    /// `(d * self, d)` with the least clearing denominator `d`.
    pub fn clear_denominators(&self) -> (IntMatrix, BigInt) {
        let d = self.denominator();
        let dr = Rational::from_integer(d.clone());
        let data = self.data.iter().map(|x| (x * &dr).to_integer()).collect();
        (IntMatrix::new(self.rows, self.cols, data), d)
    }

    pub fn to_int(&self) -> Result<IntMatrix> {
        if !self.is_integral() {
            return Err(Error::NotIntegral("matrix has fractional entries".into()));
        }
        let data = self.data.iter().map(|x| x.to_integer()).collect();
        Ok(IntMatrix::new(self.rows, self.cols, data))
    }

    /// Exact determinant by fraction-free style Gaussian elimination.
    pub fn det(&self) -> Rational {
        assert_eq!(self.rows, self.cols, "determinant of non-square matrix");
        let n = self.rows;
        if n == 0 {
            return Rational::one();
        }
        let mut m = self.clone();
        let mut det = Rational::one();
        for col in 0..n {
            let pivot = (col..n).find(|&r| !m.at(r, col).is_zero());
            let Some(p) = pivot else {
                return Rational::zero();
            };
            if p != col {
                m.swap_rows(p, col);
                det = -det;
            }
            let pv = m.at(col, col).clone();
            det *= &pv;
            for r in col + 1..n {
                let factor = m.at(r, col) / &pv;
                if factor.is_zero() {
                    continue;
                }
                for c in col..n {
                    let sub = &factor * m.at(col, c);
                    *m.at_mut(r, c) -= sub;
                }
            }
        }
        det
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        let (rank, _) = m.row_echelon();
        rank
    }

    /// In-place row echelon; returns (rank, pivot columns).
    fn row_echelon(&mut self) -> (usize, Vec<usize>) {
        let mut pivots = Vec::new();
        let mut r = 0;
        for col in 0..self.cols {
            if r == self.rows {
                break;
            }
            let Some(p) = (r..self.rows).find(|&i| !self.at(i, col).is_zero()) else {
                continue;
            };
            self.swap_rows(p, r);
            let pv = self.at(r, col).clone();
            for i in 0..self.rows {
                if i == r || self.at(i, col).is_zero() {
                    continue;
                }
                let factor = self.at(i, col) / &pv;
                for c in col..self.cols {
                    let sub = &factor * self.at(r, c);
                    *self.at_mut(i, c) -= sub;
                }
            }
            pivots.push(col);
            r += 1;
        }
        (r, pivots)
    }

    /// Exact inverse; errors on singular input.
    pub fn inverse(&self) -> Result<RatMatrix> {
        assert_eq!(self.rows, self.cols, "inverse of non-square matrix");
        let n = self.rows;
        let mut work = RatMatrix::zero(n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                *work.at_mut(i, j) = self.at(i, j).clone();
            }
            *work.at_mut(i, n + i) = Rational::one();
        }
        for col in 0..n {
            let Some(p) = (col..n).find(|&r| !work.at(r, col).is_zero()) else {
                return Err(Error::RankDeficient("singular matrix in inverse".into()));
            };
            work.swap_rows(p, col);
            let pv = work.at(col, col).clone();
            for c in col..2 * n {
                *work.at_mut(col, c) /= &pv;
            }
            for r in 0..n {
                if r == col || work.at(r, col).is_zero() {
                    continue;
                }
                let factor = work.at(r, col).clone();
                for c in col..2 * n {
                    let sub = &factor * work.at(col, c);
                    *work.at_mut(r, c) -= sub;
                }
            }
        }
        let mut inv = RatMatrix::zero(n, n);
        for i in 0..n {
            for j in 0..n {
                *inv.at_mut(i, j) = work.at(i, n + j).clone();
            }
        }
        Ok(inv)
    }

    /// True iff symmetric positive definite (all leading principal pivots
    /// positive under symmetric elimination). Exact.
    pub fn is_positive_definite(&self) -> bool {
        if !self.is_symmetric() {
            return false;
        }
        let n = self.rows;
        let mut m = self.clone();
        for k in 0..n {
            let pv = m.at(k, k).clone();
            if !pv.is_positive() {
                return false;
            }
            for i in k + 1..n {
                let factor = m.at(i, k) / &pv;
                if factor.is_zero() {
                    continue;
                }
                for j in k..n {
                    let sub = &factor * m.at(k, j);
                    *m.at_mut(i, j) -= sub;
                }
            }
        }
        true
    }

    /// Solve `x * A = b` for row vector `x`; `None` when `b` is outside the
    /// row space, error shape on length mismatch. `A` is `self` (n x m).
    pub fn solve_left(&self, b: &[Rational]) -> Option<Vec<Rational>> {
        assert_eq!(b.len(), self.cols, "solve_left rhs length");
        // Solve A^T y^T = b^T by elimination on the augmented transpose.
        let n = self.rows;
        let m = self.cols;
        let mut work = RatMatrix::zero(m, n + 1);
        for i in 0..m {
            for j in 0..n {
                *work.at_mut(i, j) = self.at(j, i).clone();
            }
            *work.at_mut(i, n) = b[i].clone();
        }
        let mut pivot_of_col: Vec<Option<usize>> = vec![None; n];
        let mut r = 0;
        for col in 0..n {
            if r == m {
                break;
            }
            let Some(p) = (r..m).find(|&i| !work.at(i, col).is_zero()) else {
                continue;
            };
            work.swap_rows(p, r);
            let pv = work.at(r, col).clone();
            for c in col..n + 1 {
                *work.at_mut(r, c) /= &pv;
            }
            for i in 0..m {
                if i == r || work.at(i, col).is_zero() {
                    continue;
                }
                let factor = work.at(i, col).clone();
                for c in col..n + 1 {
                    let sub = &factor * work.at(r, c);
                    *work.at_mut(i, c) -= sub;
                }
            }
            pivot_of_col[col] = Some(r);
            r += 1;
        }
        // Inconsistent if any zero row has nonzero rhs.
        for i in r..m {
            if !work.at(i, n).is_zero() {
                return None;
            }
        }
        let mut x = vec![Rational::zero(); n];
        for col in 0..n {
            if let Some(pr) = pivot_of_col[col] {
                x[col] = work.at(pr, n).clone();
            }
        }
        Some(x)
    }

    /// Block-diagonal join of two square matrices.
    pub fn block_diag(&self, other: &RatMatrix) -> RatMatrix {
        assert_eq!(self.rows, self.cols);
        assert_eq!(other.rows, other.cols);
        let n = self.rows + other.rows;
        let mut out = RatMatrix::zero(n, n);
        for i in 0..self.rows {
            for j in 0..self.cols {
                *out.at_mut(i, j) = self.at(i, j).clone();
            }
        }
        for i in 0..other.rows {
            for j in 0..other.cols {
                *out.at_mut(self.rows + i, self.cols + j) = other.at(i, j).clone();
            }
        }
        out
    }

    /// Vertical stack; both operands must share a column count.
    pub fn stack(&self, other: &RatMatrix) -> RatMatrix {
        assert_eq!(self.cols, other.cols, "stack column mismatch");
        let mut data = self.data.clone();
        data.extend(other.data.iter().cloned());
        RatMatrix::new(self.rows + other.rows, self.cols, data)
    }
}

/// Dense row-major matrix of big integers.
#[derive(Clone, PartialEq, Eq)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigInt>,
}

impl std::fmt::Debug for IntMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "IntMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|j| self.at(i, j).to_string()).collect();
            writeln!(f, "  {}", row.join(" "))?;
        }
        write!(f, "]")
    }
}

impl IntMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<BigInt>) -> Self {
        assert_eq!(data.len(), rows * cols, "entry count mismatch");
        IntMatrix { rows, cols, data }
    }

    pub fn zero(rows: usize, cols: usize) -> Self {
        IntMatrix::new(rows, cols, vec![BigInt::zero(); rows * cols])
    }

    pub fn identity(n: usize) -> Self {
        let mut m = IntMatrix::zero(n, n);
        for i in 0..n {
            *m.at_mut(i, i) = BigInt::one();
        }
        m
    }

    pub fn from_i64(rows: usize, cols: usize, entries: &[i64]) -> Self {
        IntMatrix::new(rows, cols, entries.iter().map(|&n| BigInt::from(n)).collect())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn at(&self, i: usize, j: usize) -> &BigInt {
        &self.data[i * self.cols + j]
    }

    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut BigInt {
        &mut self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[BigInt] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_zero_matrix(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    pub fn to_rat(&self) -> RatMatrix {
        RatMatrix::new(
            self.rows,
            self.cols,
            self.data
                .iter()
                .map(|x| Rational::from_integer(x.clone()))
                .collect(),
        )
    }

    pub fn transpose(&self) -> IntMatrix {
        let mut t = IntMatrix::zero(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                *t.at_mut(j, i) = self.at(i, j).clone();
            }
        }
        t
    }

    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.cols, other.rows, "matrix product shape mismatch");
        let mut out = IntMatrix::zero(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.at(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.at(k, j);
                    if !b.is_zero() {
                        *out.at_mut(i, j) += a * b;
                    }
                }
            }
        }
        out
    }

    pub fn add(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        IntMatrix::new(self.rows, self.cols, data)
    }

    pub fn sub(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        IntMatrix::new(self.rows, self.cols, data)
    }

    pub fn pow(&self, mut e: u64) -> IntMatrix {
        assert_eq!(self.rows, self.cols);
        let mut acc = IntMatrix::identity(self.rows);
        let mut base = self.clone();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    pub fn negate_row(&mut self, r: usize) {
        for j in 0..self.cols {
            let v = -self.at(r, j).clone();
            *self.at_mut(r, j) = v;
        }
    }

    /// `row[a] += c * row[b]`
    pub fn add_row_multiple(&mut self, a: usize, b: usize, c: &BigInt) {
        if c.is_zero() {
            return;
        }
        for j in 0..self.cols {
            let v = self.at(b, j) * c;
            *self.at_mut(a, j) += v;
        }
    }

    pub fn det(&self) -> BigInt {
        let d = self.to_rat().det();
        debug_assert!(is_integer(&d));
        d.to_integer()
    }

    /// Exact inverse of a unimodular matrix (integer result asserted).
    pub fn inverse_unimodular(&self) -> Result<IntMatrix> {
        let inv = self.to_rat().inverse()?;
        inv.to_int()
            .map_err(|_| Error::Input("matrix inverse is not integral".into()))
    }
}

/// Row Hermite normal form with transform: result `(h, u)` with `u * m = h`,
/// `u` unimodular, `h` in row echelon with positive pivots and entries above
/// each pivot reduced into `[0, pivot)`. Zero rows sink to the bottom.
pub fn hnf_with_transform(m: &IntMatrix) -> (IntMatrix, IntMatrix) {
    let mut h = m.clone();
    let mut u = IntMatrix::identity(m.rows());
    let rows = m.rows();
    let cols = m.cols();
    let mut r = 0;
    for col in 0..cols {
        if r == rows {
            break;
        }
        // Clear the column below r by pairwise gcd steps.
        loop {
            let mut pivot: Option<usize> = None;
            for i in r..rows {
                if !h.at(i, col).is_zero() {
                    match pivot {
                        None => pivot = Some(i),
                        Some(p) => {
                            if h.at(i, col).abs() < h.at(p, col).abs() {
                                pivot = Some(i)
                            }
                        }
                    }
                }
            }
            let Some(p) = pivot else {
                break;
            };
            h.swap_rows(p, r);
            u.swap_rows(p, r);
            if h.at(r, col).is_negative() {
                h.negate_row(r);
                u.negate_row(r);
            }
            let pv = h.at(r, col).clone();
            let mut any = false;
            for i in r + 1..rows {
                if h.at(i, col).is_zero() {
                    continue;
                }
                let q = -(h.at(i, col).div_floor(&pv));
                h.add_row_multiple(i, r, &q);
                u.add_row_multiple(i, r, &q);
                if !h.at(i, col).is_zero() {
                    any = true;
                }
            }
            if !any {
                break;
            }
        }
        if h.at(r, col).is_zero() {
            continue;
        }
        // Reduce entries above the pivot into [0, pivot).
        let pv = h.at(r, col).clone();
        for i in 0..r {
            let q = -(h.at(i, col).div_floor(&pv));
            h.add_row_multiple(i, r, &q);
            u.add_row_multiple(i, r, &q);
        }
        r += 1;
    }
    (h, u)
}

/// Row HNF without the transform.
pub fn hnf(m: &IntMatrix) -> IntMatrix {
    hnf_with_transform(m).0
}

/// Nonzero rows of the HNF: the canonical basis of the row space over Z.
pub fn hnf_nonzero(m: &IntMatrix) -> IntMatrix {
    let h = hnf(m);
    let mut rows = Vec::new();
    for i in 0..h.rows() {
        if h.row(i).iter().any(|x| !x.is_zero()) {
            rows.push(i);
        }
    }
    let mut data = Vec::with_capacity(rows.len() * h.cols());
    for i in rows.iter() {
        data.extend(h.row(*i).iter().cloned());
    }
    IntMatrix::new(rows.len(), h.cols(), data)
}

/// Basis of the left integer kernel `{x : x * m = 0}`, as rows.
pub fn int_kernel(m: &IntMatrix) -> IntMatrix {
    let (h, u) = hnf_with_transform(m);
    let mut zero_rows = Vec::new();
    for i in 0..h.rows() {
        if h.row(i).iter().all(|x| x.is_zero()) {
            zero_rows.push(i);
        }
    }
    let mut data = Vec::with_capacity(zero_rows.len() * u.cols());
    for i in zero_rows {
        data.extend(u.row(i).iter().cloned());
    }
    IntMatrix::new(data.len() / u.cols().max(1), u.cols(), data)
}

/// Smith normal form result: `u * m * v = diag(divisors)` padded with zeros,
/// `divisors[i] | divisors[i+1]`, and `u`, `v` unimodular.
pub struct Snf {
    pub divisors: Vec<BigInt>,
    pub left: IntMatrix,
    pub right: IntMatrix,
    pub diag: IntMatrix,
}

/// Smith normal form over Z with both transforms.
pub fn smith_normal_form(m: &IntMatrix) -> Snf {
    let rows = m.rows();
    let cols = m.cols();
    let mut a = m.clone();
    let mut u = IntMatrix::identity(rows);
    let mut v = IntMatrix::identity(cols);

    // Column operations act on a and v via the transposed view.
    fn col_swap(a: &mut IntMatrix, v: &mut IntMatrix, x: usize, y: usize) {
        if x == y {
            return;
        }
        for i in 0..a.rows() {
            let tmp = a.at(i, x).clone();
            *a.at_mut(i, x) = a.at(i, y).clone();
            *a.at_mut(i, y) = tmp;
        }
        for i in 0..v.rows() {
            let tmp = v.at(i, x).clone();
            *v.at_mut(i, x) = v.at(i, y).clone();
            *v.at_mut(i, y) = tmp;
        }
    }
    // col[x] += c * col[y]
    fn col_add(a: &mut IntMatrix, v: &mut IntMatrix, x: usize, y: usize, c: &BigInt) {
        if c.is_zero() {
            return;
        }
        for i in 0..a.rows() {
            let val = a.at(i, y) * c;
            *a.at_mut(i, x) += val;
        }
        for i in 0..v.rows() {
            let val = v.at(i, y) * c;
            *v.at_mut(i, x) += val;
        }
    }

    let k = rows.min(cols);
    for t in 0..k {
        // Find a nonzero pivot in the trailing block.
        'pivot: loop {
            let mut best: Option<(usize, usize)> = None;
            for i in t..rows {
                for j in t..cols {
                    if !a.at(i, j).is_zero() {
                        let better = match &best {
                            None => true,
                            Some((bi, bj)) => a.at(i, j).abs() < a.at(*bi, *bj).abs(),
                        };
                        if better {
                            best = Some((i, j));
                        }
                    }
                }
            }
            let Some((pi, pj)) = best else {
                break 'pivot;
            };
            a.swap_rows(pi, t);
            u.swap_rows(pi, t);
            col_swap(&mut a, &mut v, pj, t);
            if a.at(t, t).is_negative() {
                a.negate_row(t);
                u.negate_row(t);
            }
            let pv = a.at(t, t).clone();
            let mut dirty = false;
            for i in t + 1..rows {
                if !a.at(i, t).is_zero() {
                    let q = -(a.at(i, t).div_floor(&pv));
                    a.add_row_multiple(i, t, &q);
                    u.add_row_multiple(i, t, &q);
                    if !a.at(i, t).is_zero() {
                        dirty = true;
                    }
                }
            }
            for j in t + 1..cols {
                if !a.at(t, j).is_zero() {
                    let q = -(a.at(t, j).div_floor(&pv));
                    col_add(&mut a, &mut v, j, t, &q);
                    if !a.at(t, j).is_zero() {
                        dirty = true;
                    }
                }
            }
            if dirty {
                continue 'pivot;
            }
            // Pivot divides the entire trailing block, or fold a bad entry in.
            let mut fixed = true;
            'scan: for i in t + 1..rows {
                for j in t + 1..cols {
                    if !(a.at(i, j) % &pv).is_zero() {
                        let one = BigInt::one();
                        a.add_row_multiple(t, i, &one);
                        u.add_row_multiple(t, i, &one);
                        fixed = false;
                        break 'scan;
                    }
                }
            }
            if fixed {
                break 'pivot;
            }
        }
    }

    let mut divisors = Vec::new();
    for t in 0..k {
        let d = a.at(t, t).clone();
        if d.is_zero() {
            break;
        }
        divisors.push(d);
    }
    Snf {
        divisors,
        left: u,
        right: v,
        diag: a,
    }
}
