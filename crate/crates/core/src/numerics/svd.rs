use nalgebra::DMatrix;

use super::matrix::{ComplexMatrix, ComplexVector, C64};

/// Dominant singular triple of a matrix.
#[derive(Clone, Debug)]
pub struct PrincipalSvd {
    /// Left singular vector (unit norm).
    pub u: ComplexVector,
    pub sigma: f64,
    /// Right singular vector (unit norm); its first nonzero entry is real and nonnegative.
    pub v: ComplexVector,
}

/// Largest singular value with its singular vectors, satisfying `u^H h v = sigma`.
///
/// A zero matrix yields `sigma = 0` with `u`, `v` the first canonical basis vectors.
pub fn principal_svd(h: &ComplexMatrix) -> PrincipalSvd {
    let (rows, cols) = h.shape();
    let e1 = |n: usize| {
        let mut v = ComplexVector::zeros(n);
        if n > 0 {
            v[0] = C64::new(1.0, 0.0);
        }
        v
    };
    if h.is_zero() || rows == 0 || cols == 0 {
        return PrincipalSvd {
            u: e1(rows),
            sigma: 0.0,
            v: e1(cols),
        };
    }

    let m = DMatrix::from_column_slice(rows, cols, h.as_slice());
    let svd = m.svd(true, true);
    let (best, sigma) = svd
        .singular_values
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, s)| if s > acc.1 { (i, s) } else { acc });
    let u_mat = svd.u.expect("left singular vectors requested");
    let vt = svd.v_t.expect("right singular vectors requested");

    let mut u: Vec<C64> = u_mat.column(best).iter().copied().collect();
    // Row `best` of V^H is the conjugate of the right singular vector.
    let mut v: Vec<C64> = vt.row(best).iter().map(|z| z.conj()).collect();

    // Phase convention: first nonzero entry of v real and nonnegative. Rotating u
    // by the same phase leaves u^H h v unchanged.
    if let Some(first) = v.iter().find(|z| z.norm() > 1e-300).copied() {
        let rot = first.conj() / first.norm();
        for z in v.iter_mut() {
            *z *= rot;
        }
        for z in u.iter_mut() {
            *z *= rot;
        }
    }

    PrincipalSvd {
        u: u.into(),
        sigma,
        v: v.into(),
    }
}
