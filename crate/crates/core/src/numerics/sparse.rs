use serde::{Deserialize, Serialize};

use super::matrix::{ComplexVector, C64};
use super::NumericsError;

/// Keeps the `l` largest-magnitude entries of `v` in place and zeroes the rest.
///
/// Ties at the threshold magnitude go to the lower index.
pub fn hard_threshold(v: &[C64], l: usize) -> ComplexVector {
    if l >= v.len() {
        return ComplexVector::from(v.to_vec());
    }
    let mut out = ComplexVector::zeros(v.len());
    for i in largest_indices(v, l) {
        out[i] = v[i];
    }
    out
}

/// Indices of the `l` largest-magnitude entries, ordered by decreasing magnitude
/// (lower index first among equals).
pub fn largest_indices(v: &[C64], l: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    let mag: Vec<f64> = v.iter().map(|z| z.norm_sqr()).collect();
    // Larger magnitude first, lower index on ties.
    let order = |a: &usize, b: &usize| mag[*b].total_cmp(&mag[*a]).then(a.cmp(b));
    if l < idx.len() {
        idx.select_nth_unstable_by(l, order);
        idx.truncate(l);
    }
    idx.sort_by(order);
    idx
}

/// A sparse complex vector: a dimension plus strictly increasing support indices
/// with their values.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    dim: usize,
    support: Vec<usize>,
    values: Vec<C64>,
}

impl SparseVector {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            support: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds a sparse vector from `(index, value)` pairs in any order. Duplicate
    /// indices are summed.
    pub fn from_pairs(dim: usize, pairs: impl IntoIterator<Item = (usize, C64)>) -> Result<Self, NumericsError> {
        let mut pairs: Vec<(usize, C64)> = pairs.into_iter().collect();
        pairs.sort_by_key(|p| p.0);
        let mut support: Vec<usize> = Vec::with_capacity(pairs.len());
        let mut values: Vec<C64> = Vec::with_capacity(pairs.len());
        for (i, v) in pairs {
            if i >= dim {
                return Err(NumericsError::IndexOutOfRange { index: i, len: dim });
            }
            if support.last() == Some(&i) {
                *values.last_mut().expect("non-empty") += v;
            } else {
                support.push(i);
                values.push(v);
            }
        }
        Ok(Self { dim, support, values })
    }

    /// Nonzero entries of a dense vector.
    pub fn from_dense(v: &[C64]) -> Self {
        let (support, values) = v
            .iter()
            .enumerate()
            .filter(|(_, z)| z.norm_sqr() > 0.0)
            .map(|(i, &z)| (i, z))
            .unzip();
        Self {
            dim: v.len(),
            support,
            values,
        }
    }

    pub fn to_dense(&self) -> ComplexVector {
        let mut out = ComplexVector::zeros(self.dim);
        for (&i, &v) in self.support.iter().zip(&self.values) {
            out[i] = v;
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn nnz(&self) -> usize {
        self.values.iter().filter(|z| z.norm_sqr() > 0.0).count()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, C64)> + '_ {
        self.support.iter().copied().zip(self.values.iter().copied())
    }

    pub fn get(&self, i: usize) -> C64 {
        match self.support.binary_search(&i) {
            Ok(k) => self.values[k],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    /// `‖self − other‖²` for vectors of equal dimension.
    pub fn distance_sqr(&self, other: &Self) -> Result<f64, NumericsError> {
        if self.dim != other.dim {
            return Err(NumericsError::DimensionMismatch {
                op: "distance_sqr",
                expected: self.dim,
                found: other.dim,
            });
        }
        let (mut a, mut b) = (0, 0);
        let mut acc = 0.0;
        while a < self.support.len() || b < other.support.len() {
            let ia = self.support.get(a).copied().unwrap_or(usize::MAX);
            let ib = other.support.get(b).copied().unwrap_or(usize::MAX);
            if ia == ib {
                acc += (self.values[a] - other.values[b]).norm_sqr();
                a += 1;
                b += 1;
            } else if ia < ib {
                acc += self.values[a].norm_sqr();
                a += 1;
            } else {
                acc += other.values[b].norm_sqr();
                b += 1;
            }
        }
        Ok(acc)
    }
}
