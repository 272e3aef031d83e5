//! Dense matrices and Gaussian elimination over exact rationals and `f64`.
//!
//! Everything here is small-matrix machinery: boundary operators of complexes
//! with a few dozen cells, relation matrices of finite covers. Elimination picks
//! the lowest-index nonzero pivot for exact scalars (reproducible echelon forms)
//! and the largest-magnitude pivot for floating point.

use std::fmt::{self, Debug};
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Pivot tolerance for floating-point elimination.
pub const F64_PIVOT_EPS: f64 = 1e-10;

/// Scalar field used by the elimination routines.
pub trait Scalar:
    Clone + Debug + PartialEq + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self>
{
    /// Exact scalars use first-nonzero pivoting, inexact ones partial pivoting.
    const EXACT: bool;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_i64(v: i64) -> Self;
    fn is_zero(&self) -> bool;
    fn magnitude(&self) -> f64;
    fn div(&self, other: &Self) -> Self;
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn magnitude(&self) -> f64 {
        self.abs().to_f64().unwrap_or(f64::INFINITY)
    }
    fn div(&self, other: &Self) -> Self {
        self / other
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_i64(v: i64) -> Self {
        v as f64
    }
    fn is_zero(&self) -> bool {
        self.abs() <= F64_PIVOT_EPS
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
    fn div(&self, other: &Self) -> Self {
        self / other
    }
}

/// Row-major dense matrix.
#[derive(Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Debug> Debug for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            writeln!(f, "  {:?}", &self.data[r * self.cols..(r + 1) * self.cols])?;
        }
        write!(f, "]")
    }
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, T::one());
        }
        m
    }

    /// Builds from nested rows. All rows must have the same length.
    pub fn from_rows(rows: Vec<Vec<T>>) -> Option<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return None;
        }
        Some(Matrix { rows: r, cols: c, data: rows.into_iter().flatten().collect() })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> &T {
        &self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: T) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<T> {
        (0..self.rows).map(|r| self.get(r, c).clone()).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self.get(c, r).clone())
    }

    /// Matrix product; `None` on shape mismatch.
    pub fn mul(&self, other: &Self) -> Option<Self> {
        if self.cols != other.rows {
            return None;
        }
        Some(Self::from_fn(self.rows, other.cols, |r, c| {
            let mut acc = T::zero();
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a.is_zero() {
                    continue;
                }
                acc = acc + a.clone() * other.get(k, c).clone();
            }
            acc
        }))
    }

    pub fn mul_vec(&self, v: &[T]) -> Option<Vec<T>> {
        if self.cols != v.len() {
            return None;
        }
        Some(
            (0..self.rows)
                .map(|r| {
                    self.row(r)
                        .iter()
                        .zip(v)
                        .fold(T::zero(), |acc, (a, b)| acc + a.clone() * b.clone())
                })
                .collect(),
        )
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Scalar::is_zero)
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> Matrix<U> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }

    /// Reduced row echelon form together with the pivot columns.
    pub fn rref(&self) -> Rref<T> {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut lead_row = 0;
        for col in 0..m.cols {
            if lead_row == m.rows {
                break;
            }
            let pick = if T::EXACT {
                (lead_row..m.rows).find(|&r| !m.get(r, col).is_zero())
            } else {
                (lead_row..m.rows)
                    .filter(|&r| !m.get(r, col).is_zero())
                    .max_by(|&a, &b| {
                        m.get(a, col)
                            .magnitude()
                            .partial_cmp(&m.get(b, col).magnitude())
                            .unwrap_or(std::cmp::Ordering::Equal)
                            // prefer the lower row on exact ties
                            .then(b.cmp(&a))
                    })
            };
            let Some(p) = pick else { continue };
            m.swap_rows(lead_row, p);
            let pivot = m.get(lead_row, col).clone();
            for c in 0..m.cols {
                let v = m.get(lead_row, c).div(&pivot);
                m.set(lead_row, c, v);
            }
            for r in 0..m.rows {
                if r == lead_row {
                    continue;
                }
                let factor = m.get(r, col).clone();
                if factor.is_zero() {
                    continue;
                }
                for c in 0..m.cols {
                    let v = m.get(r, c).clone() - factor.clone() * m.get(lead_row, c).clone();
                    m.set(r, c, v);
                }
            }
            if !T::EXACT {
                // flush round-off below the pivot tolerance
                for r in 0..m.rows {
                    if r != lead_row && m.get(r, col).is_zero() {
                        m.set(r, col, T::zero());
                    }
                }
            }
            pivots.push(col);
            lead_row += 1;
        }
        Rref { matrix: m, pivots }
    }

    pub fn rank(&self) -> usize {
        self.rref().pivots.len()
    }

    /// Basis of the right null space, one vector per free column.
    pub fn nullspace(&self) -> Vec<Vec<T>> {
        let Rref { matrix, pivots } = self.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut v = vec![T::zero(); self.cols];
                v[f] = T::one();
                for (row, &p) in pivots.iter().enumerate() {
                    v[p] = -matrix.get(row, f).clone();
                }
                v
            })
            .collect()
    }

    /// Some solution of `self · x = b`, or `None` if the system is inconsistent.
    pub fn solve(&self, b: &[T]) -> Option<Vec<T>> {
        if b.len() != self.rows {
            return None;
        }
        let aug = Self::from_fn(self.rows, self.cols + 1, |r, c| {
            if c < self.cols {
                self.get(r, c).clone()
            } else {
                b[r].clone()
            }
        });
        let Rref { matrix, pivots } = aug.rref();
        if pivots.last() == Some(&self.cols) {
            return None;
        }
        let mut x = vec![T::zero(); self.cols];
        for (row, &p) in pivots.iter().enumerate() {
            x[p] = matrix.get(row, self.cols).clone();
        }
        Some(x)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }
}

/// Result of [`Matrix::rref`].
#[derive(Debug, Clone)]
pub struct Rref<T> {
    pub matrix: Matrix<T>,
    pub pivots: Vec<usize>,
}

/// Canonical reduction of vectors modulo a subspace.
///
/// The subspace is given by spanning vectors; reduction zeroes every pivot
/// coordinate of the subspace's echelon basis, so two vectors are congruent
/// iff their reductions are equal.
#[derive(Debug, Clone)]
pub struct QuotientReducer<T> {
    basis: Vec<Vec<T>>,
    pivots: Vec<usize>,
    dim: usize,
}

impl<T: Scalar> QuotientReducer<T> {
    pub fn new(dim: usize, spanning: &[Vec<T>]) -> Self {
        if spanning.is_empty() {
            return QuotientReducer { basis: Vec::new(), pivots: Vec::new(), dim };
        }
        let m = Matrix::from_rows(spanning.to_vec()).expect("ragged spanning set");
        assert_eq!(m.cols(), dim, "spanning vector dimension");
        let Rref { matrix, pivots } = m.rref();
        let basis = (0..pivots.len()).map(|r| matrix.row(r).to_vec()).collect();
        QuotientReducer { basis, pivots, dim }
    }

    pub fn subspace_dim(&self) -> usize {
        self.pivots.len()
    }

    /// Coordinates that survive reduction, in ascending order.
    pub fn free_coordinates(&self) -> Vec<usize> {
        (0..self.dim).filter(|c| !self.pivots.contains(c)).collect()
    }

    pub fn reduce(&self, v: &[T]) -> Vec<T> {
        let mut out = v.to_vec();
        for (row, &p) in self.basis.iter().zip(&self.pivots) {
            let factor = out[p].clone();
            if factor.is_zero() {
                continue;
            }
            for (o, b) in out.iter_mut().zip(row) {
                *o = o.clone() - factor.clone() * b.clone();
            }
            out[p] = T::zero();
        }
        out
    }

    /// Reduced vector restricted to the free coordinates.
    pub fn quotient_coordinates(&self, v: &[T]) -> Vec<T> {
        let reduced = self.reduce(v);
        self.free_coordinates().into_iter().map(|c| reduced[c].clone()).collect()
    }

    pub fn contains(&self, v: &[T]) -> bool {
        self.reduce(v).iter().all(Scalar::is_zero)
    }
}

/// Rank of an integer matrix by fraction-free (Bareiss) elimination.
pub fn integer_rank(rows: usize, cols: usize, entries: &[i64]) -> usize {
    assert_eq!(entries.len(), rows * cols);
    let mut m: Vec<Vec<BigInt>> =
        (0..rows).map(|r| entries[r * cols..(r + 1) * cols].iter().map(|&v| BigInt::from(v)).collect()).collect();
    let mut prev = BigInt::one();
    let mut rank = 0;
    for col in 0..cols {
        if rank == rows {
            break;
        }
        let Some(p) = (rank..rows).find(|&r| !m[r][col].is_zero()) else { continue };
        m.swap(rank, p);
        for r in rank + 1..rows {
            for c in col + 1..cols {
                let v = (&m[rank][col] * &m[r][c] - &m[r][col] * &m[rank][c]) / &prev;
                m[r][c] = v;
            }
            m[r][col] = BigInt::zero();
        }
        prev = m[rank][col].clone();
        rank += 1;
    }
    rank
}

/// Exact rational from an integer.
pub fn q(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

/// Exact rational `num/den`.
pub fn qr(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Parses `"p/q"` or `"p"`.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().ok()?;
            let d: BigInt = d.trim().parse().ok()?;
            if d.is_zero() {
                return None;
            }
            Some(BigRational::new(n, d))
        }
        None => Some(BigRational::from_integer(s.parse().ok()?)),
    }
}

/// Formats as `"p/q"`, or `"p"` for integers.
pub fn format_rational(v: &BigRational) -> String {
    if v.is_integer() {
        v.numer().to_string()
    } else {
        format!("{}/{}", v.numer(), v.denom())
    }
}

/// Rounds a float onto the grid `1/denominator` as an exact rational.
pub fn round_to_grid(v: f64, denominator: i64) -> BigRational {
    let scaled = (v * denominator as f64).round();
    BigRational::new(BigInt::from(scaled as i64), BigInt::from(denominator))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qm(rows: Vec<Vec<i64>>) -> Matrix<BigRational> {
        Matrix::from_rows(rows.into_iter().map(|r| r.into_iter().map(q).collect()).collect()).unwrap()
    }

    #[test]
    fn rref_of_triangle_boundary() {
        // boundary1 of the directed triangle 0->1, 1->2, 2->0
        let m = qm(vec![vec![-1, 0, 1], vec![1, -1, 0], vec![0, 1, -1]]);
        let r = m.rref();
        assert_eq!(r.pivots, vec![0, 1]);
        assert_eq!(m.rank(), 2);
        let ns = m.nullspace();
        assert_eq!(ns, vec![vec![q(1), q(1), q(1)]]);
    }

    #[test]
    fn bareiss_matches_rational_rank() {
        let entries = [2, 4, 1, 1, 2, 0, 3, 6, 1, 0, 0, 5];
        let m = Matrix::from_fn(4, 3, |r, c| q(entries[r * 3 + c]));
        assert_eq!(integer_rank(4, 3, &entries), m.rank());
        assert_eq!(integer_rank(0, 0, &[]), 0);
    }

    #[test]
    fn solve_detects_inconsistency() {
        let m = qm(vec![vec![1, 1], vec![2, 2]]);
        assert!(m.solve(&[q(1), q(3)]).is_none());
        let x = m.solve(&[q(1), q(2)]).unwrap();
        assert_eq!(m.mul_vec(&x).unwrap(), vec![q(1), q(2)]);
    }

    #[test]
    fn quotient_reduction_is_canonical() {
        let red = QuotientReducer::new(3, &[vec![q(1), q(1), q(0)]]);
        let a = red.reduce(&[q(2), q(0), q(5)]);
        let b = red.reduce(&[q(0), q(-2), q(5)]);
        assert_eq!(a, b);
        assert_eq!(red.free_coordinates(), vec![1, 2]);
        assert!(red.contains(&[q(3), q(3), q(0)]));
    }

    #[test]
    fn rational_text_round_trip() {
        let v = qr(-6, 4);
        assert_eq!(format_rational(&v), "-3/2");
        assert_eq!(parse_rational("-3/2"), Some(v));
        assert_eq!(parse_rational("7"), Some(q(7)));
        assert_eq!(parse_rational("1/0"), None);
    }

    #[test]
    fn float_rref_uses_partial_pivoting() {
        let m = Matrix::from_rows(vec![vec![1e-3, 1.0], vec![1.0, 1.0]]).unwrap();
        let x = m.solve(&[1.0, 2.0]).unwrap();
        assert!((x[0] - 1.001_001).abs() < 1e-5);
        assert!((x[1] - 0.998_999).abs() < 1e-5);
    }
}
