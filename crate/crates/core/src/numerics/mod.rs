//! Complex dense linear algebra and the scalar special functions the channel
//! model needs.

mod lstsq;
mod matrix;
mod sparse;
mod special;
mod svd;

use thiserror::Error;

pub use lstsq::{householder_solve, least_squares, LeastSquaresSolution, RANK_TOL};
pub use matrix::{axpy, dotc, khatri_rao, kron, kron_vec, norm, vectorize, ComplexMatrix, ComplexVector, C64};
pub use sparse::{hard_threshold, largest_indices, SparseVector};
pub use special::bessel_j0;
pub use svd::{principal_svd, PrincipalSvd};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NumericsError {
    #[error("{op}: dimension mismatch (expected {expected}, found {found})")]
    DimensionMismatch {
        op: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("matrix is rank deficient at column {column}")]
    RankDeficient { column: usize },
    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },
}
