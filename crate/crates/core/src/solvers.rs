//! Sparse recovery: CoSaMP and warm-started iterative hard thresholding.
//!
//! Both solvers tally complex multiply-accumulates (MACs) as they go. Only the
//! arithmetic that scales with the problem size is counted: matrix-vector
//! products, least-squares factorizations and norms.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{
    dotc, hard_threshold, householder_solve, largest_indices, norm, ComplexMatrix, ComplexVector, NumericsError,
    SparseVector, C64,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("invalid solver setting `{field}`: {reason}")]
    InvalidConfig { field: &'static str, reason: String },
    #[error("{what}: expected length {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Target sparsity `L`.
    pub sparsity: usize,
    /// CoSaMP iterations `K`, or IHT iterations `I`.
    pub max_iters: usize,
    /// Stop once `‖r‖ ≤ residual_tol · ‖y‖`.
    pub residual_tol: f64,
    /// IHT step `μ`.
    pub step_size: f64,
    /// IHT on the column-normalized dictionary.
    pub normalize_columns: bool,
    /// IHT: on a residual increase, shrink `μ` to `step_size / ‖Φ‖₂²` and redo the step.
    pub safeguard: bool,
    /// CoSaMP: re-solve least squares on the pruned support instead of keeping
    /// the merged-set coefficients.
    pub refit: bool,
    /// Run every iteration even after the iterate has stopped changing. Used for
    /// operation counting.
    pub exhaust_iterations: bool,
}

impl SolverConfig {
    /// CoSaMP defaults: `K = 10`, relative tolerance `1e-6`, refit after pruning.
    pub fn cosamp(sparsity: usize) -> Self {
        Self {
            sparsity,
            max_iters: 10,
            residual_tol: 1e-6,
            step_size: 1.0,
            normalize_columns: false,
            safeguard: false,
            refit: true,
            exhaust_iterations: false,
        }
    }

    /// IHT defaults: `I = 10`, `μ = 1`, no normalization.
    pub fn iht(sparsity: usize) -> Self {
        Self {
            sparsity,
            max_iters: 10,
            residual_tol: 0.0,
            step_size: 1.0,
            normalize_columns: false,
            safeguard: false,
            refit: false,
            exhaust_iterations: false,
        }
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |field, reason: &str| {
            Err(SolverError::InvalidConfig {
                field,
                reason: reason.to_string(),
            })
        };
        if self.sparsity == 0 {
            return bad("sparsity", "must be at least 1");
        }
        if self.max_iters == 0 {
            return bad("max_iters", "must be at least 1");
        }
        if !(self.residual_tol >= 0.0 && self.residual_tol.is_finite()) {
            return bad("residual_tol", "must be finite and nonnegative");
        }
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return bad("step_size", "must be finite and positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub estimate: SparseVector,
    pub iterations_used: usize,
    /// `‖y − Φ·estimate‖`.
    pub final_residual: f64,
    /// Complex multiply-accumulates spent.
    pub op_count: u64,
    /// Residual norm before the first iteration and after each accepted one.
    pub residual_history: Vec<f64>,
}

fn check_rows(phi: &ComplexMatrix, y: &[C64]) -> Result<(), SolverError> {
    if phi.rows() != y.len() {
        return Err(SolverError::DimensionMismatch {
            what: "measurement vector",
            expected: phi.rows(),
            found: y.len(),
        });
    }
    Ok(())
}

/// `y − Φ_S b` for support `S`.
fn residual(phi: &ComplexMatrix, y: &[C64], support: &[usize], coeffs: &[C64]) -> ComplexVector {
    let mut r = ComplexVector::from(y.to_vec());
    for (&k, &b) in support.iter().zip(coeffs) {
        crate::numerics::axpy(-b, phi.column(k), &mut r);
    }
    r
}

/// `‖y − Φ z‖` computed from scratch.
pub fn residual_norm(phi: &ComplexMatrix, y: &[C64], z: &SparseVector) -> f64 {
    norm(&residual(phi, y, z.support(), z.values()))
}

/// CoSaMP with support merging, least squares on at most `3L` columns and pruning
/// back to `L`.
///
/// Candidates are ranked by correlation with the residual over column norm, so
/// unequal column energies do not bias the selection. A candidate that makes the
/// least-squares system rank deficient (a repeated column, for instance) is
/// dropped and the next one in line is tried.
///
/// With `refit`, the pruned coefficients are re-estimated by least squares on
/// the pruned support.
///
/// The iterate only ever moves to a point with a smaller or equal residual: an
/// iteration that would raise it is discarded and the solver stops. It also stops
/// when an iteration reproduces the previous iterate (every later iteration would
/// too), unless `exhaust_iterations` is set.
pub fn cosamp(phi: &ComplexMatrix, y: &[C64], cfg: &SolverConfig) -> Result<SolverReport, SolverError> {
    cfg.validate()?;
    check_rows(phi, y)?;
    let (m, n) = phi.shape();
    let l = cfg.sparsity.min(n);
    let y_norm = norm(y);
    let mut ops = m as u64;

    let mut support: Vec<usize> = Vec::new();
    let mut coeffs: Vec<C64> = Vec::new();
    let mut r = ComplexVector::from(y.to_vec());
    let mut r_norm = y_norm;
    let mut history = vec![r_norm];
    let mut iterations = 0;

    if y_norm == 0.0 || n == 0 {
        return Ok(SolverReport {
            estimate: SparseVector::zeros(n),
            iterations_used: 1,
            final_residual: y_norm,
            op_count: ops,
            residual_history: history,
        });
    }

    let inv_norms: Vec<f64> = phi
        .column_norms()
        .into_iter()
        .map(|c| if c > 0.0 { 1.0 / c } else { 0.0 })
        .collect();
    ops += (m * n) as u64;

    while iterations < cfg.max_iters {
        iterations += 1;
        let proxy = phi.adjoint_matvec(&r)?;
        ops += (m * n) as u64;
        let score: Vec<C64> = proxy.iter().zip(&inv_norms).map(|(p, s)| p * s).collect();

        // Current support first so that, on a rank collision, the newest index is
        // the one dropped; the next candidate in line then takes its place.
        let mut queue = largest_indices(&score, (8 * l + 8).min(n))
            .into_iter()
            .filter(|&k| score[k].norm_sqr() > 0.0 && !support.contains(&k));
        let mut merged = support.clone();
        merged.extend(queue.by_ref().take(2 * l));
        let solution = loop {
            match householder_solve(&phi.select_columns(&merged), y) {
                Ok(sol) => break sol,
                Err(NumericsError::RankDeficient { column }) => {
                    merged.remove(column);
                    if merged.len() < support.len() + 2 * l {
                        merged.extend(queue.next());
                    }
                }
                Err(e) => return Err(e.into()),
            }
        };
        ops += solution.macs;

        let keep = largest_indices(&solution.x, l);
        let mut pairs: Vec<(usize, C64)> = keep
            .iter()
            .map(|&i| (merged[i], solution.x[i]))
            .filter(|(_, b)| b.norm_sqr() > 0.0)
            .collect();
        pairs.sort_by_key(|p| p.0);
        let (new_support, mut new_coeffs): (Vec<usize>, Vec<C64>) = pairs.into_iter().unzip();
        if cfg.refit && !new_support.is_empty() {
            // A subset of a full-rank column set stays full rank.
            let fit = householder_solve(&phi.select_columns(&new_support), y)?;
            ops += fit.macs;
            new_coeffs = fit.x.into_inner();
        }
        let new_r = residual(phi, y, &new_support, &new_coeffs);
        let new_norm = norm(&new_r);
        ops += (m * new_support.len() + m) as u64;

        if new_norm > r_norm {
            break;
        }
        let unchanged = new_support == support
            && norm(
                &new_coeffs
                    .iter()
                    .zip(&coeffs)
                    .map(|(a, b)| a - b)
                    .collect::<Vec<_>>(),
            ) <= 1e-12 * norm(&new_coeffs);
        support = new_support;
        coeffs = new_coeffs;
        r = new_r;
        r_norm = new_norm;
        history.push(r_norm);

        if r_norm <= cfg.residual_tol * y_norm || (unchanged && !cfg.exhaust_iterations) {
            break;
        }
    }

    Ok(SolverReport {
        estimate: SparseVector::from_pairs(n, support.into_iter().zip(coeffs))?,
        iterations_used: iterations,
        final_residual: r_norm,
        op_count: ops,
        residual_history: history,
    })
}

/// Power-iteration estimate of `‖Φ‖₂²` from a fixed start vector.
pub fn spectral_norm_sq(phi: &ComplexMatrix, iters: usize, ops: &mut u64) -> f64 {
    let (m, n) = phi.shape();
    let mut x = ComplexVector::from(vec![C64::new(1.0 / (n.max(1) as f64).sqrt(), 0.0); n]);
    let mut est = 0.0;
    for _ in 0..iters {
        let ax = phi.matvec(&x).expect("square-compatible shapes");
        let g = phi.adjoint_matvec(&ax).expect("square-compatible shapes");
        *ops += 2 * (m * n) as u64;
        let gn = norm(&g);
        if gn == 0.0 {
            return 0.0;
        }
        est = dotc(&x, &g).re;
        x = g.scale(C64::new(1.0 / gn, 0.0));
    }
    est
}

/// Iterative hard thresholding `ẑ_k = H_L(ẑ_{k−1} + μ Φ^H (y − Φ ẑ_{k−1}))` from the
/// warm start `z0`, for `max_iters` iterations. No linear system is solved.
///
/// With `normalize_columns` the iteration runs on `Φ D⁻¹` in the variable `D z`,
/// `D` holding the column norms, and the result is mapped back.
pub fn iht(phi: &ComplexMatrix, y: &[C64], z0: &SparseVector, cfg: &SolverConfig) -> Result<SolverReport, SolverError> {
    cfg.validate()?;
    check_rows(phi, y)?;
    let (m, n) = phi.shape();
    if z0.dim() != n {
        return Err(SolverError::DimensionMismatch {
            what: "warm start",
            expected: n,
            found: z0.dim(),
        });
    }
    let l = cfg.sparsity.min(n);
    let y_norm = norm(y);
    let mut ops = 0u64;

    let normalized;
    let (work, scale): (&ComplexMatrix, Vec<f64>) = if cfg.normalize_columns {
        let norms: Vec<f64> = phi
            .column_norms()
            .into_iter()
            .map(|c| if c > 0.0 { c } else { 1.0 })
            .collect();
        ops += (m * n) as u64;
        normalized = ComplexMatrix::from_fn(m, n, |i, j| phi[(i, j)] / norms[j]);
        (&normalized, norms)
    } else {
        (phi, vec![1.0; n])
    };

    let mut x = ComplexVector::zeros(n);
    for (k, v) in z0.iter() {
        x[k] = v * scale[k];
    }
    let mut x = hard_threshold(&x, l);
    let mut supp: Vec<usize> = (0..n).filter(|&k| x[k].norm_sqr() > 0.0).collect();
    let mut r = residual(work, y, &supp, &supp.iter().map(|&k| x[k]).collect::<Vec<_>>());
    let mut r_norm = norm(&r);
    ops += (m * supp.len() + m) as u64;
    let mut history = vec![r_norm];
    let mut mu = cfg.step_size;
    let mut shrunk = false;
    let mut iterations = 0;

    while iterations < cfg.max_iters {
        if r_norm <= cfg.residual_tol * y_norm && !cfg.exhaust_iterations {
            break;
        }
        iterations += 1;
        let g = work.adjoint_matvec(&r)?;
        ops += (m * n) as u64;
        let (new_x, new_supp, new_r, new_norm) = loop {
            let cand: Vec<C64> = x.iter().zip(g.iter()).map(|(a, b)| a + b * mu).collect();
            let nx = hard_threshold(&cand, l);
            let ns: Vec<usize> = (0..n).filter(|&k| nx[k].norm_sqr() > 0.0).collect();
            let nr = residual(work, y, &ns, &ns.iter().map(|&k| nx[k]).collect::<Vec<_>>());
            let nn = norm(&nr);
            ops += (m * ns.len() + m) as u64;
            if cfg.safeguard && !shrunk && nn > r_norm {
                shrunk = true;
                let s = spectral_norm_sq(work, 20, &mut ops);
                if s > 0.0 {
                    mu = cfg.step_size / s;
                    continue;
                }
            }
            break (nx, ns, nr, nn);
        };
        x = new_x;
        supp = new_supp;
        r = new_r;
        r_norm = new_norm;
        history.push(r_norm);
    }

    let pairs = supp.iter().map(|&k| (k, x[k] / scale[k]));
    Ok(SolverReport {
        estimate: SparseVector::from_pairs(n, pairs)?,
        iterations_used: iterations,
        final_residual: r_norm,
        op_count: ops,
        residual_history: history,
    })
}
