use super::matrix::{axpy, dotc, norm, ComplexMatrix, ComplexVector, C64};
use super::NumericsError;

/// Columns whose component orthogonal to the preceding columns falls below this
/// fraction of their own norm are treated as linearly dependent.
pub const RANK_TOL: f64 = 1e-10;

/// Solution of a dense least-squares problem plus the multiply-accumulate tally
/// spent computing it.
#[derive(Clone, Debug)]
pub struct LeastSquaresSolution {
    pub x: ComplexVector,
    pub macs: u64,
}

/// `argmin_x ‖y − a·x‖` for a full-column-rank `a`.
///
/// Rank deficiency is an error; the offending column is the first one (in input
/// order) that is numerically dependent on the columns before it.
pub fn least_squares(a: &ComplexMatrix, y: &[C64]) -> Result<ComplexVector, NumericsError> {
    householder_solve(a, y).map(|s| s.x)
}

/// Householder QR solve with operation counting.
pub fn householder_solve(a: &ComplexMatrix, y: &[C64]) -> Result<LeastSquaresSolution, NumericsError> {
    let (m, n) = a.shape();
    if y.len() != m {
        return Err(NumericsError::DimensionMismatch {
            op: "least_squares",
            expected: m,
            found: y.len(),
        });
    }
    if n == 0 {
        return Ok(LeastSquaresSolution {
            x: ComplexVector::zeros(0),
            macs: 0,
        });
    }
    if n > m {
        return Err(NumericsError::RankDeficient { column: m });
    }

    let mut r = a.clone();
    let mut b = y.to_vec();
    let mut macs = 0u64;
    let original_norms: Vec<f64> = (0..n).map(|j| norm(a.column(j))).collect();
    macs += (m * n) as u64;

    for k in 0..n {
        let len = (m - k) as u64;
        let x = &r.column(k)[k..];
        let xnorm = norm(x);
        macs += len;
        if original_norms[k] == 0.0 || xnorm <= RANK_TOL * original_norms[k] {
            return Err(NumericsError::RankDeficient { column: k });
        }
        let x0 = x[0];
        let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { C64::new(1.0, 0.0) };
        let alpha = -phase * xnorm;
        // v = x − alpha·e1, normalized so that H = I − 2 v v^H.
        let mut v: Vec<C64> = x.to_vec();
        v[0] -= alpha;
        let vnorm = norm(&v);
        for vi in v.iter_mut() {
            *vi /= vnorm;
        }
        macs += len;

        {
            let col = r.column_mut(k);
            col[k] = alpha;
            for c in col[k + 1..].iter_mut() {
                *c = C64::new(0.0, 0.0);
            }
        }
        for j in k + 1..n {
            let col = &mut r.column_mut(j)[k..];
            let s = dotc(&v, col) * 2.0;
            axpy(-s, &v, col);
            macs += 2 * len;
        }
        let tail = &mut b[k..];
        let s = dotc(&v, tail) * 2.0;
        axpy(-s, &v, tail);
        macs += 2 * len;
    }

    // Back substitution on the leading n×n triangle.
    let mut x = vec![C64::new(0.0, 0.0); n];
    for i in (0..n).rev() {
        let mut acc = b[i];
        for j in i + 1..n {
            acc -= r[(i, j)] * x[j];
        }
        x[i] = acc / r[(i, i)];
        macs += (n - i) as u64;
    }
    Ok(LeastSquaresSolution {
        x: ComplexVector::from(x),
        macs,
    })
}
