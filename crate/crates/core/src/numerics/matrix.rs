//! Dense complex matrices and vectors.
//!
//! Matrices are stored column-major: entry `(i, j)` lives at `data[j * rows + i]`.
//! Vectorization is therefore a zero-cost reinterpretation of the storage, which
//! keeps `vec(B X A^T) == (A ⊗ B) vec(X)` reproducible bit-for-bit.

use std::ops::{Deref, DerefMut, Index, IndexMut};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::NumericsError;

pub type C64 = Complex64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    /// Builds a matrix from column-major storage.
    pub fn from_column_major(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self, NumericsError> {
        if data.len() != rows * cols {
            return Err(NumericsError::DimensionMismatch {
                op: "from_column_major",
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Stacks equally sized vectors as the columns of a matrix.
    pub fn from_columns(columns: &[ComplexVector]) -> Result<Self, NumericsError> {
        let rows = columns.first().map_or(0, |c| c.len());
        let mut data = Vec::with_capacity(rows * columns.len());
        for c in columns {
            if c.len() != rows {
                return Err(NumericsError::DimensionMismatch {
                    op: "from_columns",
                    expected: rows,
                    found: c.len(),
                });
            }
            data.extend_from_slice(c);
        }
        Ok(Self {
            rows,
            cols: columns.len(),
            data,
        })
    }

    /// Builds a matrix from row-major nested slices; convenient in tests.
    pub fn from_rows(rows: &[Vec<C64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self::from_fn(r, c, |i, j| rows[i][j])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> &[C64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn column_mut(&mut self, j: usize) -> &mut [C64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn column_vector(&self, j: usize) -> ComplexVector {
        ComplexVector::from(self.column(j).to_vec())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self, NumericsError> {
        self.check_same_shape(other, "sub")?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self, NumericsError> {
        self.check_same_shape(other, "add")?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    fn check_same_shape(&self, other: &Self, op: &'static str) -> Result<(), NumericsError> {
        if self.shape() != other.shape() {
            return Err(NumericsError::DimensionMismatch {
                op,
                expected: self.rows * self.cols,
                found: other.rows * other.cols,
            });
        }
        Ok(())
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self, NumericsError> {
        if self.cols != rhs.rows {
            return Err(NumericsError::DimensionMismatch {
                op: "matmul",
                expected: self.cols,
                found: rhs.rows,
            });
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for j in 0..rhs.cols {
            let dst = &mut out.data[j * self.rows..(j + 1) * self.rows];
            for (k, &b) in rhs.column(j).iter().enumerate() {
                if b == C64::new(0.0, 0.0) {
                    continue;
                }
                axpy(b, self.column(k), dst);
            }
        }
        Ok(out)
    }

    /// `self · x`.
    pub fn matvec(&self, x: &[C64]) -> Result<ComplexVector, NumericsError> {
        if self.cols != x.len() {
            return Err(NumericsError::DimensionMismatch {
                op: "matvec",
                expected: self.cols,
                found: x.len(),
            });
        }
        let mut out = vec![C64::new(0.0, 0.0); self.rows];
        for (j, &xj) in x.iter().enumerate() {
            if xj != C64::new(0.0, 0.0) {
                axpy(xj, self.column(j), &mut out);
            }
        }
        Ok(ComplexVector(out))
    }

    /// `self^H · x`, computed column by column without materializing the adjoint.
    pub fn adjoint_matvec(&self, x: &[C64]) -> Result<ComplexVector, NumericsError> {
        if self.rows != x.len() {
            return Err(NumericsError::DimensionMismatch {
                op: "adjoint_matvec",
                expected: self.rows,
                found: x.len(),
            });
        }
        Ok(ComplexVector(
            (0..self.cols).map(|j| dotc(self.column(j), x)).collect(),
        ))
    }

    /// Copies the listed columns, in order, into a new matrix.
    pub fn select_columns(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(self.rows * idx.len());
        for &j in idx {
            data.extend_from_slice(self.column(j));
        }
        Self {
            rows: self.rows,
            cols: idx.len(),
            data,
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn column_norms(&self) -> Vec<f64> {
        (0..self.cols).map(|j| norm(self.column(j))).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|z| z.norm_sqr() == 0.0)
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[j * self.rows + i]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[j * self.rows + i]
    }
}

/// A dense complex column vector.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ComplexVector(Vec<C64>);

impl ComplexVector {
    pub fn zeros(len: usize) -> Self {
        Self(vec![C64::new(0.0, 0.0); len])
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub fn into_inner(self) -> Vec<C64> {
        self.0
    }

    pub fn scale(&self, s: C64) -> Self {
        Self(self.0.iter().map(|z| z * s).collect())
    }

    pub fn sub(&self, other: &[C64]) -> Self {
        assert_eq!(self.len(), other.len(), "vector length mismatch");
        Self(self.0.iter().zip(other).map(|(a, b)| a - b).collect())
    }

    /// `self^H · other`.
    pub fn dotc(&self, other: &[C64]) -> C64 {
        dotc(&self.0, other)
    }
}

impl From<Vec<C64>> for ComplexVector {
    fn from(v: Vec<C64>) -> Self {
        Self(v)
    }
}

impl FromIterator<C64> for ComplexVector {
    fn from_iter<I: IntoIterator<Item = C64>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

impl Deref for ComplexVector {
    type Target = [C64];
    fn deref(&self) -> &[C64] {
        &self.0
    }
}

impl DerefMut for ComplexVector {
    fn deref_mut(&mut self) -> &mut [C64] {
        &mut self.0
    }
}

/// `Σ conj(a_i) · b_i`
#[inline]
pub fn dotc(a: &[C64], b: &[C64]) -> C64 {
    debug_assert_eq!(a.len(), b.len());
    let (mut re, mut im) = (0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        re += x.re * y.re + x.im * y.im;
        im += x.re * y.im - x.im * y.re;
    }
    C64::new(re, im)
}

/// `y += alpha · x`
#[inline]
pub fn axpy(alpha: C64, x: &[C64], y: &mut [C64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        yi.re += alpha.re * xi.re - alpha.im * xi.im;
        yi.im += alpha.re * xi.im + alpha.im * xi.re;
    }
}

#[inline]
pub fn norm(x: &[C64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Kronecker product: block `(i, j)` of the result is `a[i, j] · b`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let rows = ar * br;
    let mut out = ComplexMatrix::zeros(rows, ac * bc);
    for ja in 0..ac {
        for jb in 0..bc {
            let dst = out.column_mut(ja * bc + jb);
            for ia in 0..ar {
                let s = a[(ia, ja)];
                for (ib, &bv) in b.column(jb).iter().enumerate() {
                    dst[ia * br + ib] = s * bv;
                }
            }
        }
    }
    out
}

/// Kronecker product of two column vectors.
pub fn kron_vec(a: &[C64], b: &[C64]) -> ComplexVector {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for &x in a {
        out.extend(b.iter().map(|&y| x * y));
    }
    ComplexVector(out)
}

/// Column-wise Kronecker (Khatri-Rao) product.
pub fn khatri_rao(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix, NumericsError> {
    if a.cols() != b.cols() {
        return Err(NumericsError::DimensionMismatch {
            op: "khatri_rao",
            expected: a.cols(),
            found: b.cols(),
        });
    }
    let rows = a.rows() * b.rows();
    let mut data = Vec::with_capacity(rows * a.cols());
    for j in 0..a.cols() {
        data.extend(kron_vec(a.column(j), b.column(j)).0);
    }
    ComplexMatrix::from_column_major(rows, a.cols(), data)
}

/// Stacks the columns of `a` top-to-bottom, left-to-right.
pub fn vectorize(a: &ComplexMatrix) -> ComplexVector {
    ComplexVector(a.as_slice().to_vec())
}
