//! Training beams, angle dictionaries and noisy compressive measurements.
//!
//! A dictionary over TX grid `φ̄` and RX grid `θ̄` has sensing matrix
//! `Φ = √P_tr · (Fᵀ A_T(φ̄)^*) ⊗ (W^H A_R(θ̄))`; column `k = i_tx·|θ̄| + i_rx`
//! is the response of grid pair `(φ̄[i_tx], θ̄[i_rx])`.

use std::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{response_distance, steering_matrix, ula_response, wrap_angle, wrapped_distance};
use crate::numerics::{kron, kron_vec, ComplexMatrix, ComplexVector, NumericsError, SparseVector, C64};
use crate::rng::complex_normal;

/// Upper bound on training beams per side.
pub const MAX_TRAINING_BEAMS: usize = 4096;

/// Two grid angles whose sines differ by less than this give identical columns.
const ALIAS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SensingError {
    #[error("invalid sensing parameter `{field}`: {reason}")]
    InvalidParam { field: &'static str, reason: String },
    #[error("DFT-subset training needs M ≤ N (M = {m}, N = {n})")]
    DftTooLarge { m: usize, n: usize },
    #[error("column index {index} out of range for dictionary with {cols} columns")]
    IndexOutOfRange { index: usize, cols: usize },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrainingScheme {
    /// Entries `e^{jθ}/√N` with i.i.d. uniform phases.
    RandomPhase,
    /// The first `M` columns of the `N`-point DFT, scaled to `1/√N` entries.
    DftSubset,
}

impl std::str::FromStr for TrainingScheme {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "random-phase" => Ok(Self::RandomPhase),
            "dft-subset" => Ok(Self::DftSubset),
            other => Err(format!("unknown training scheme `{other}` (expected random-phase or dft-subset)")),
        }
    }
}

/// Training beamformers, combiners and link budget, fixed for a whole run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensingSetup {
    /// `N_T × M_T` training beamformers.
    pub f: ComplexMatrix,
    /// `N_R × M_R` measurement combiners.
    pub w: ComplexMatrix,
    /// Training power (linear).
    pub p_tr: f64,
    /// Noise variance (linear).
    pub sigma2: f64,
    /// `Fᵀ ⊗ W^H`, `M_T M_R × N_T N_R`.
    pub cached_kron: ComplexMatrix,
}

impl SensingSetup {
    pub fn n_t(&self) -> usize {
        self.f.rows()
    }

    pub fn n_r(&self) -> usize {
        self.w.rows()
    }

    pub fn m_t(&self) -> usize {
        self.f.cols()
    }

    pub fn m_r(&self) -> usize {
        self.w.cols()
    }

    /// Number of scalar measurements per block.
    pub fn measurements(&self) -> usize {
        self.m_t() * self.m_r()
    }

    /// `P_tr / σ²` in dB.
    pub fn snr_db(&self) -> f64 {
        10.0 * (self.p_tr / self.sigma2).log10()
    }
}

fn training_matrix<R: Rng + ?Sized>(n: usize, m: usize, scheme: TrainingScheme, rng: &mut R) -> Result<ComplexMatrix, SensingError> {
    let scale = 1.0 / (n as f64).sqrt();
    match scheme {
        TrainingScheme::RandomPhase => {
            let mut out = ComplexMatrix::zeros(n, m);
            for j in 0..m {
                for z in out.column_mut(j) {
                    *z = C64::from_polar(scale, rng.random_range(0.0..TAU));
                }
            }
            Ok(out)
        }
        TrainingScheme::DftSubset => {
            if m > n {
                return Err(SensingError::DftTooLarge { m, n });
            }
            Ok(ComplexMatrix::from_fn(n, m, |k, p| {
                // Reduce k·p mod n so the phase argument stays small and exact.
                let e = (k * p) % n;
                C64::from_polar(scale, -TAU * e as f64 / n as f64)
            }))
        }
    }
}

/// Draws the training matrices `F` (`N_T × M_T`) and `W` (`N_R × M_R`).
#[allow(clippy::too_many_arguments)]
pub fn make_training<R: Rng + ?Sized>(
    n_t: usize,
    n_r: usize,
    m_t: usize,
    m_r: usize,
    scheme: TrainingScheme,
    p_tr: f64,
    sigma2: f64,
    rng: &mut R,
) -> Result<SensingSetup, SensingError> {
    let bad = |field, reason: &str| SensingError::InvalidParam {
        field,
        reason: reason.to_string(),
    };
    if n_t == 0 || n_r == 0 {
        return Err(bad("n", "antenna counts must be positive"));
    }
    for (field, m) in [("m_t", m_t), ("m_r", m_r)] {
        if m == 0 || m > MAX_TRAINING_BEAMS {
            return Err(bad(field, &format!("must lie in 1..={MAX_TRAINING_BEAMS}")));
        }
    }
    if !(p_tr >= 0.0 && p_tr.is_finite()) {
        return Err(bad("p_tr", "must be finite and nonnegative"));
    }
    if !(sigma2 >= 0.0 && sigma2.is_finite()) {
        return Err(bad("sigma2", "must be finite and nonnegative"));
    }
    let f = training_matrix(n_t, m_t, scheme, rng)?;
    let w = training_matrix(n_r, m_r, scheme, rng)?;
    let cached_kron = kron(&f.transpose(), &w.adjoint());
    Ok(SensingSetup {
        f,
        w,
        p_tr,
        sigma2,
        cached_kron,
    })
}

/// `g` equally spaced angles `2πi/g`, `i = 0..g`.
pub fn uniform_grid(g: usize) -> Vec<f64> {
    (0..g).map(|i| TAU * i as f64 / g as f64).collect()
}

/// An angle-pair dictionary and its sensing matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dictionary {
    pub tx_angles: Vec<f64>,
    pub rx_angles: Vec<f64>,
    /// `N_T × |tx_angles|`.
    pub a_t: ComplexMatrix,
    /// `N_R × |rx_angles|`.
    pub a_r: ComplexMatrix,
    /// `M_T M_R × |tx_angles|·|rx_angles|`.
    pub phi: ComplexMatrix,
    tx_canon: Vec<usize>,
    rx_canon: Vec<usize>,
}

/// For every grid entry, the lowest index with the same array response.
fn canonical_map(angles: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..angles.len()).collect();
    // The response depends on sin(angle) modulo 2, so sin = −1 coincides with sin = 1.
    let s: Vec<f64> = angles
        .iter()
        .map(|a| a.sin())
        .map(|v| if v < -1.0 + ALIAS_TOL { v + 2.0 } else { v })
        .collect();
    order.sort_by(|&a, &b| s[a].total_cmp(&s[b]).then(a.cmp(&b)));
    let mut canon: Vec<usize> = (0..angles.len()).collect();
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && s[order[end]] - s[order[end - 1]] <= ALIAS_TOL {
            end += 1;
        }
        let rep = order[start..end].iter().copied().min().expect("non-empty run");
        for &i in &order[start..end] {
            canon[i] = rep;
        }
        start = end;
    }
    canon
}

/// Half the gap from each grid point to its nearest distinct neighbour.
fn coverage_radius(angles: &[f64], i: usize) -> f64 {
    angles
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, &b)| wrapped_distance(angles[i], b))
        .filter(|&d| d > 1e-12)
        .fold(f64::INFINITY, f64::min)
        .min(std::f64::consts::PI)
        / 2.0
}

fn snap_angle(angles: &[f64], target: f64) -> Option<usize> {
    let (best, dist) = angles
        .iter()
        .enumerate()
        .map(|(i, &a)| (i, response_distance(target, a)))
        .fold((usize::MAX, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
    if best == usize::MAX {
        return None;
    }
    let radius = coverage_radius(angles, best);
    let radius = if radius.is_finite() { radius } else { 0.0 };
    (dist <= radius + 1e-9).then_some(best)
}

impl Dictionary {
    fn assemble(tx_angles: Vec<f64>, rx_angles: Vec<f64>, a_t: ComplexMatrix, a_r: ComplexMatrix, phi: ComplexMatrix) -> Self {
        let tx_canon = canonical_map(&tx_angles);
        let rx_canon = canonical_map(&rx_angles);
        Self {
            tx_angles,
            rx_angles,
            a_t,
            a_r,
            phi,
            tx_canon,
            rx_canon,
        }
    }

    pub fn cols(&self) -> usize {
        self.phi.cols()
    }

    pub fn rows(&self) -> usize {
        self.phi.rows()
    }

    pub fn column_index(&self, i_tx: usize, i_rx: usize) -> usize {
        i_tx * self.rx_angles.len() + i_rx
    }

    /// Grid pair `(i_tx, i_rx)` behind column `index`.
    pub fn split_index(&self, index: usize) -> Result<(usize, usize), SensingError> {
        if index >= self.cols() {
            return Err(SensingError::IndexOutOfRange {
                index,
                cols: self.cols(),
            });
        }
        let g_r = self.rx_angles.len();
        Ok((index / g_r, index % g_r))
    }

    /// Lowest column index whose atom has the same response as column `index`.
    ///
    /// Grids over the full circle contain both `a` and `π − a`, which a ULA cannot
    /// tell apart; their columns coincide. So do `π/2` and `3π/2`.
    pub fn canonical_index(&self, index: usize) -> usize {
        let g_r = self.rx_angles.len();
        self.tx_canon[index / g_r] * g_r + self.rx_canon[index % g_r]
    }

    /// Column whose angle pair is nearest to `(aod, aoa)`, or `None` when the pair
    /// lies outside the region the grids cover.
    pub fn snap(&self, aod: f64, aoa: f64) -> Option<usize> {
        let i = snap_angle(&self.tx_angles, aod)?;
        let j = snap_angle(&self.rx_angles, aoa)?;
        Some(self.column_index(i, j))
    }

    /// Nearest grid pair by plain wrapped distance, without a coverage check.
    pub fn nearest(&self, aod: f64, aoa: f64) -> usize {
        let near = |grid: &[f64], t: f64| {
            grid.iter()
                .enumerate()
                .map(|(i, &a)| (i, wrapped_distance(t, a)))
                .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc })
                .0
        };
        self.column_index(near(&self.tx_angles, aod), near(&self.rx_angles, aoa))
    }
}

/// Dictionary over arbitrary grids, built from the factored form
/// `√P_tr · (Fᵀ A_T^*) ⊗ (W^H A_R)`.
pub fn dictionary_from_grids(setup: &SensingSetup, tx_angles: Vec<f64>, rx_angles: Vec<f64>) -> Result<Dictionary, SensingError> {
    let a_t = steering_matrix(setup.n_t(), &tx_angles);
    let a_r = steering_matrix(setup.n_r(), &rx_angles);
    let left = setup.f.transpose().matmul(&a_t.conj())?;
    let right = setup.w.adjoint().matmul(&a_r)?;
    let phi = kron(&left, &right).scale(C64::new(setup.p_tr.sqrt(), 0.0));
    Ok(Dictionary::assemble(tx_angles, rx_angles, a_t, a_r, phi))
}

/// Full dictionary over uniform `g_t × g_r` grids.
pub fn full_dictionary(setup: &SensingSetup, n_t: usize, n_r: usize, g_t: usize, g_r: usize) -> Result<Dictionary, SensingError> {
    check_antennas(setup, n_t, n_r)?;
    if g_t == 0 || g_r == 0 {
        return Err(SensingError::InvalidParam {
            field: "g",
            reason: "grid sizes must be positive".into(),
        });
    }
    dictionary_from_grids(setup, uniform_grid(g_t), uniform_grid(g_r))
}

fn check_antennas(setup: &SensingSetup, n_t: usize, n_r: usize) -> Result<(), SensingError> {
    if setup.n_t() != n_t || setup.n_r() != n_r {
        return Err(SensingError::InvalidParam {
            field: "n",
            reason: format!(
                "setup is {}×{} antennas, dictionary asked for {n_t}×{n_r}",
                setup.n_t(),
                setup.n_r()
            ),
        });
    }
    Ok(())
}

/// Per-path search grids around the previous block's angles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedGrids {
    pub tx: Vec<Vec<f64>>,
    pub rx: Vec<Vec<f64>>,
}

impl ReducedGrids {
    /// All paths' AoD grids, concatenated path by path.
    pub fn tx_flat(&self) -> Vec<f64> {
        self.tx.iter().flatten().copied().collect()
    }

    pub fn rx_flat(&self) -> Vec<f64> {
        self.rx.iter().flatten().copied().collect()
    }

    /// Drops grid points already present (within 1e-12 rad) earlier in the
    /// concatenation, so overlapping paths share columns.
    pub fn dedup(mut self) -> Self {
        fn dedup_side(side: &mut [Vec<f64>]) {
            let mut seen: Vec<f64> = Vec::new();
            for grid in side.iter_mut() {
                grid.retain(|&a| {
                    let dup = seen.iter().any(|&b| wrapped_distance(a, b) <= 1e-12);
                    if !dup {
                        seen.push(a);
                    }
                    !dup
                });
            }
        }
        dedup_side(&mut self.tx);
        dedup_side(&mut self.rx);
        self
    }
}

fn linspace_around(center: f64, delta: f64, g: usize) -> Vec<f64> {
    if delta == 0.0 || g <= 1 {
        return vec![wrap_angle(center)];
    }
    let step = 2.0 * delta / (g - 1) as f64;
    (0..g)
        .map(|i| wrap_angle(center - delta + step * i as f64))
        .collect()
}

/// `g_bar` equally spaced angles over `[a − δ, a + δ]` (both ends included) for
/// every previous angle `a`. With `δ = 0` or `g_bar = 1` each grid collapses to
/// the previous angle itself.
pub fn reduced_grids(prev_aods: &[f64], prev_aoas: &[f64], delta: f64, g_bar_t: usize, g_bar_r: usize) -> ReducedGrids {
    ReducedGrids {
        tx: prev_aods.iter().map(|&a| linspace_around(a, delta, g_bar_t)).collect(),
        rx: prev_aoas.iter().map(|&a| linspace_around(a, delta, g_bar_r)).collect(),
    }
}

/// Reduced dictionary `√P_tr · (Fᵀ ⊗ W^H)(Â_T^* ∘ Â_R)`, reusing the cached
/// `Fᵀ ⊗ W^H` so only the Khatri-Rao factor depends on the block.
pub fn reduced_dictionary(setup: &SensingSetup, n_t: usize, n_r: usize, grids: &ReducedGrids) -> Result<Dictionary, SensingError> {
    check_antennas(setup, n_t, n_r)?;
    let tx = grids.tx_flat();
    let rx = grids.rx_flat();
    let a_t = steering_matrix(n_t, &tx);
    let a_r = steering_matrix(n_r, &rx);
    let a_t_conj = a_t.conj();
    let mut pair_cols = Vec::with_capacity(tx.len() * rx.len());
    for i in 0..tx.len() {
        for j in 0..rx.len() {
            pair_cols.push(kron_vec(a_t_conj.column(i), a_r.column(j)));
        }
    }
    let pairs = ComplexMatrix::from_columns(&pair_cols)?;
    let phi = setup
        .cached_kron
        .matmul(&pairs)?
        .scale(C64::new(setup.p_tr.sqrt(), 0.0));
    Ok(Dictionary::assemble(tx, rx, a_t, a_r, phi))
}

/// Noiseless part of the measurement: `vec(√P_tr · W^H H F)`.
pub fn measure_noiseless(h: &ComplexMatrix, setup: &SensingSetup) -> Result<ComplexVector, SensingError> {
    if h.shape() != (setup.n_r(), setup.n_t()) {
        return Err(SensingError::InvalidParam {
            field: "h",
            reason: format!(
                "channel is {:?}, setup expects {}×{}",
                h.shape(),
                setup.n_r(),
                setup.n_t()
            ),
        });
    }
    let y = setup.w.adjoint().matmul(&h.matmul(&setup.f)?)?;
    Ok(ComplexVector::from(y.as_slice().to_vec()).scale(C64::new(setup.p_tr.sqrt(), 0.0)))
}

/// Measurement noise `vec(N)` with `[N]_{q,p} = w_q^H n_{q,p}`, `n_{q,p} ~ CN(0, σ² I)`.
///
/// Each entry is drawn directly as `CN(0, σ² ‖w_q‖²)`, its exact distribution.
pub fn measurement_noise<R: Rng + ?Sized>(setup: &SensingSetup, rng: &mut R) -> ComplexVector {
    let w_norm2: Vec<f64> = setup.w.column_norms().iter().map(|n| n * n).collect();
    let mut out = Vec::with_capacity(setup.measurements());
    for _p in 0..setup.m_t() {
        for &wn in &w_norm2 {
            out.push(complex_normal(rng, setup.sigma2 * wn));
        }
    }
    out.into()
}

/// One block of training: `y_v = vec(√P_tr W^H H F + N)`.
pub fn measure<R: Rng + ?Sized>(h: &ComplexMatrix, setup: &SensingSetup, rng: &mut R) -> Result<ComplexVector, SensingError> {
    let clean = measure_noiseless(h, setup)?;
    let noise = measurement_noise(setup, rng);
    Ok(clean.iter().zip(noise.iter()).map(|(a, b)| a + b).collect())
}

/// `(aod, aoa)` of column `index`.
pub fn decode_support(index: usize, dict: &Dictionary) -> Result<(f64, f64), SensingError> {
    let (i, j) = dict.split_index(index)?;
    Ok((dict.tx_angles[i], dict.rx_angles[j]))
}

/// One recovered propagation path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathEstimate {
    pub aod: f64,
    pub aoa: f64,
    pub gain: C64,
}

/// A sparse solution decoded against its dictionary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseEstimate {
    /// Strictly increasing column indices.
    pub support: Vec<usize>,
    pub gains: Vec<C64>,
    /// `paths[i]` decodes `support[i]`.
    pub paths: Vec<PathEstimate>,
}

impl SparseEstimate {
    pub fn from_sparse(z: &SparseVector, dict: &Dictionary) -> Result<Self, SensingError> {
        let mut paths = Vec::with_capacity(z.support().len());
        for (k, g) in z.iter() {
            let (aod, aoa) = decode_support(k, dict)?;
            paths.push(PathEstimate { aod, aoa, gain: g });
        }
        Ok(Self {
            support: z.support().to_vec(),
            gains: z.values().to_vec(),
            paths,
        })
    }

    pub fn to_sparse(&self, dim: usize) -> Result<SparseVector, NumericsError> {
        SparseVector::from_pairs(dim, self.support.iter().copied().zip(self.gains.iter().copied()))
    }

    /// Rebuilds `Σ g · a_R(θ) a_T(φ)^H` over the decoded paths.
    pub fn channel(&self, n_t: usize, n_r: usize) -> ComplexMatrix {
        let aods: Vec<f64> = self.paths.iter().map(|p| p.aod).collect();
        let aoas: Vec<f64> = self.paths.iter().map(|p| p.aoa).collect();
        let gains: Vec<C64> = self.paths.iter().map(|p| p.gain).collect();
        crate::channel::paths_to_matrix(n_t, n_r, &aods, &aoas, &gains)
    }
}

/// Single column of a dictionary computed straight from the factored form; used
/// where only a handful of atoms are needed.
pub fn atom_response(setup: &SensingSetup, aod: f64, aoa: f64) -> ComplexVector {
    let at = ula_response(setup.n_t(), aod);
    let ar = ula_response(setup.n_r(), aoa);
    let left: Vec<C64> = (0..setup.m_t())
        .map(|p| setup.f.column(p).iter().zip(at.iter()).map(|(f, a)| f * a.conj()).sum())
        .collect();
    let right = setup.w.adjoint_matvec(&ar).expect("combiner matches antenna count");
    kron_vec(&left, &right).scale(C64::new(setup.p_tr.sqrt(), 0.0))
}
