//! Block-by-block channel trackers.
//!
//! Every tracker estimates block 1 with CoSaMP over the full dictionary. From
//! block 2 on:
//!
//! * [`EstimatorKind::FullGreedy`] keeps solving over the full dictionary;
//! * [`EstimatorKind::CorrelationAware`] runs CoSaMP over a reduced dictionary
//!   built around the previous block's angles;
//! * [`EstimatorKind::SparsityAware`] runs a fixed number of IHT iterations over
//!   the same reduced dictionary, warm-started from the previous estimate.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{largest_indices, ComplexMatrix, ComplexVector, NumericsError, SparseVector, C64};
use crate::sensing::{
    reduced_dictionary, reduced_grids, Dictionary, PathEstimate, SensingError, SensingSetup, SparseEstimate,
};
use crate::solvers::{cosamp, iht, SolverConfig, SolverError, SolverReport};
use crate::channel::ChannelState;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimatorError {
    #[error("invalid tracker parameter `{field}`: {reason}")]
    InvalidParam { field: &'static str, reason: String },
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Sensing(#[from] SensingError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorKind {
    FullGreedy,
    CorrelationAware,
    SparsityAware,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 3] = [Self::FullGreedy, Self::CorrelationAware, Self::SparsityAware];

    pub fn label(self) -> &'static str {
        match self {
            Self::FullGreedy => "full-greedy",
            Self::CorrelationAware => "correlation-aware",
            Self::SparsityAware => "sparsity-aware",
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for EstimatorKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|k| k.label() == s)
            .ok_or_else(|| format!("unknown estimator `{s}`"))
    }
}

/// Tracker-side settings shared by all estimators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackerParams {
    /// Paths to recover, `L`.
    pub paths: usize,
    /// Reduced grid size per path, TX side.
    pub g_bar_t: usize,
    /// Reduced grid size per path, RX side.
    pub g_bar_r: usize,
    /// Half-width of the reduced search interval, radians.
    pub delta_est: f64,
    /// Merge grid points that several paths' intervals share.
    pub dedup_grids: bool,
    /// Fall back to the full dictionary for a block whose reduced solve leaves a
    /// relative residual above this value. `None` never falls back.
    pub reacquire_threshold: Option<f64>,
    /// CoSaMP settings (full baseline, block 1, correlation-aware tracker).
    pub cosamp: SolverConfig,
    /// IHT settings (sparsity-aware tracker).
    pub iht: SolverConfig,
}

impl TrackerParams {
    pub fn new(paths: usize, g_bar_t: usize, g_bar_r: usize, delta_est: f64) -> Self {
        Self {
            paths,
            g_bar_t,
            g_bar_r,
            delta_est,
            dedup_grids: false,
            reacquire_threshold: None,
            cosamp: SolverConfig::cosamp(paths),
            iht: SolverConfig::iht(paths),
        }
    }

    pub fn validate(&self) -> Result<(), EstimatorError> {
        let bad = |field, reason: &str| {
            Err(EstimatorError::InvalidParam {
                field,
                reason: reason.to_string(),
            })
        };
        if self.paths == 0 {
            return bad("paths", "must be at least 1");
        }
        if self.g_bar_t == 0 || self.g_bar_r == 0 {
            return bad("g_bar", "reduced grid sizes must be at least 1");
        }
        if !(self.delta_est >= 0.0 && self.delta_est.is_finite()) {
            return bad("delta_est", "must be finite and nonnegative");
        }
        if let Some(t) = self.reacquire_threshold {
            if !(t >= 0.0 && t.is_finite()) {
                return bad("reacquire_threshold", "must be finite and nonnegative");
            }
        }
        if self.cosamp.sparsity != self.paths || self.iht.sparsity != self.paths {
            return bad("sparsity", "solver sparsity must equal the number of paths");
        }
        self.cosamp.validate()?;
        self.iht.validate()?;
        Ok(())
    }

    /// Columns of one reduced dictionary, `L² Ḡ_T Ḡ_R` (without grid merging).
    pub fn reduced_columns(&self) -> usize {
        let (t, r) = if self.delta_est == 0.0 { (1, 1) } else { (self.g_bar_t, self.g_bar_r) };
        self.paths * self.paths * t * r
    }
}

/// Read-only context for one experiment cell.
#[derive(Debug, Clone)]
pub struct TrackingContext {
    pub setup: Arc<SensingSetup>,
    pub full: Arc<Dictionary>,
    pub params: TrackerParams,
}

/// Hand-off from one block to the next.
#[derive(Debug, Clone)]
pub struct TrackerState {
    /// Index of the block the state describes.
    pub block_index: usize,
    /// Exactly `L` angle seeds with their gains; seeds that were not part of the
    /// estimate carry a zero gain.
    pub last_paths: Vec<PathEstimate>,
    /// The estimate in `dictionary_in_use` coordinates.
    pub last_sparse: SparseVector,
    pub dictionary_in_use: Arc<Dictionary>,
}

#[derive(Debug, Clone)]
pub struct BlockEstimate {
    pub block_index: usize,
    pub sparse: SparseEstimate,
    /// `Σ g a_R(θ) a_T(φ)^H` over the decoded paths.
    pub h_hat: ComplexMatrix,
    pub solver_report: SolverReport,
    /// Dictionary the estimate is expressed in.
    pub dictionary: Arc<Dictionary>,
    /// MACs spent forming the block's dictionary (zero for the cached full one).
    pub dictionary_ops: u64,
    /// The block fell back to the full dictionary.
    pub reacquired: bool,
}

impl BlockEstimate {
    /// Solver MACs plus dictionary construction.
    pub fn total_ops(&self) -> u64 {
        self.solver_report.op_count + self.dictionary_ops
    }
}

#[allow(clippy::too_many_arguments)]
fn finish_block(
    block_index: usize,
    y: &[C64],
    report: SolverReport,
    dict: Arc<Dictionary>,
    dictionary_ops: u64,
    reacquired: bool,
    previous: Option<&TrackerState>,
    l: usize,
) -> Result<(BlockEstimate, TrackerState), EstimatorError> {
    let sparse = SparseEstimate::from_sparse(&report.estimate, &dict)?;
    let h_hat = sparse.channel(dict.a_t.rows(), dict.a_r.rows());
    let last_paths = seed_paths(y, &report.estimate, &dict, previous, l)?;
    let state = TrackerState {
        block_index,
        last_paths,
        last_sparse: report.estimate.clone(),
        dictionary_in_use: dict.clone(),
    };
    Ok((
        BlockEstimate {
            block_index,
            sparse,
            h_hat,
            solver_report: report,
            dictionary: dict,
            dictionary_ops,
            reacquired,
        },
        state,
    ))
}

/// Exactly `l` angle seeds for the next block.
///
/// Decoded paths come first. If the solver returned fewer than `l` distinct
/// directions, the gap is filled with the atoms most correlated with the
/// residual, then with the previous block's seeds, then with the lowest-index
/// atoms.
fn seed_paths(
    y: &[C64],
    z: &SparseVector,
    dict: &Dictionary,
    previous: Option<&TrackerState>,
    l: usize,
) -> Result<Vec<PathEstimate>, EstimatorError> {
    let mut used: Vec<usize> = Vec::new();
    let mut seeds: Vec<PathEstimate> = Vec::with_capacity(l);
    let mut by_gain: Vec<(usize, C64)> = z.iter().collect();
    by_gain.sort_by(|a, b| b.1.norm_sqr().total_cmp(&a.1.norm_sqr()).then(a.0.cmp(&b.0)));
    for (k, g) in by_gain {
        let c = dict.canonical_index(k);
        if seeds.len() < l && !used.contains(&c) {
            used.push(c);
            let (aod, aoa) = crate::sensing::decode_support(k, dict)?;
            seeds.push(PathEstimate { aod, aoa, gain: g });
        }
    }
    if seeds.len() < l {
        let mut res = ComplexVector::from(y.to_vec());
        for (k, g) in z.iter() {
            crate::numerics::axpy(-g, dict.phi.column(k), &mut res);
        }
        if res.norm() > 0.0 {
            let norms = dict.phi.column_norms();
            let corr: Vec<C64> = dict
                .phi
                .adjoint_matvec(&res)?
                .iter()
                .zip(&norms)
                .map(|(c, &n)| if n > 0.0 { c / n } else { C64::new(0.0, 0.0) })
                .collect();
            for k in largest_indices(&corr, corr.len()) {
                if seeds.len() >= l || corr[k].norm_sqr() == 0.0 {
                    break;
                }
                let c = dict.canonical_index(k);
                if !used.contains(&c) {
                    used.push(c);
                    let (aod, aoa) = crate::sensing::decode_support(k, dict)?;
                    seeds.push(PathEstimate {
                        aod,
                        aoa,
                        gain: C64::new(0.0, 0.0),
                    });
                }
            }
        }
    }
    if let Some(prev) = previous {
        for p in &prev.last_paths {
            if seeds.len() >= l {
                break;
            }
            let dup = seeds.iter().any(|s| s.aod == p.aod && s.aoa == p.aoa);
            if !dup {
                seeds.push(PathEstimate {
                    gain: C64::new(0.0, 0.0),
                    ..*p
                });
            }
        }
    }
    let mut k = 0;
    while seeds.len() < l && k < dict.cols() {
        let c = dict.canonical_index(k);
        if !used.contains(&c) {
            used.push(c);
            let (aod, aoa) = crate::sensing::decode_support(k, dict)?;
            seeds.push(PathEstimate {
                aod,
                aoa,
                gain: C64::new(0.0, 0.0),
            });
        }
        k += 1;
    }
    // Fewer distinct atoms than paths: repeat the last seed.
    while seeds.len() < l {
        let last = *seeds.last().expect("dictionary has at least one column");
        seeds.push(last);
    }
    Ok(seeds)
}

/// CoSaMP over the full dictionary.
pub fn full_greedy_step(
    y: &[C64],
    ctx: &TrackingContext,
    previous: Option<&TrackerState>,
) -> Result<(BlockEstimate, TrackerState), EstimatorError> {
    let report = cosamp(&ctx.full.phi, y, &ctx.params.cosamp)?;
    let block = previous.map_or(1, |s| s.block_index + 1);
    finish_block(block, y, report, ctx.full.clone(), 0, false, previous, ctx.params.paths)
}

/// The reduced dictionary for the block after `state`, and the MACs to build it.
pub fn next_reduced_dictionary(state: &TrackerState, ctx: &TrackingContext) -> Result<(Dictionary, u64), EstimatorError> {
    let p = &ctx.params;
    let aods: Vec<f64> = state.last_paths.iter().map(|s| s.aod).collect();
    let aoas: Vec<f64> = state.last_paths.iter().map(|s| s.aoa).collect();
    let mut grids = reduced_grids(&aods, &aoas, p.delta_est, p.g_bar_t, p.g_bar_r);
    if p.dedup_grids {
        grids = grids.dedup();
    }
    let setup = &ctx.setup;
    let dict = reduced_dictionary(setup, setup.n_t(), setup.n_r(), &grids)?;
    // Khatri-Rao columns plus the product with the cached Kronecker factor.
    let nn = (setup.n_t() * setup.n_r()) as u64;
    let ops = dict.cols() as u64 * nn * (1 + setup.measurements() as u64);
    Ok((dict, ops))
}

fn maybe_reacquire(
    y: &[C64],
    ctx: &TrackingContext,
    state: &TrackerState,
    report: &SolverReport,
) -> Result<Option<(BlockEstimate, TrackerState)>, EstimatorError> {
    let Some(threshold) = ctx.params.reacquire_threshold else {
        return Ok(None);
    };
    let y_norm = crate::numerics::norm(y);
    if y_norm == 0.0 || report.final_residual <= threshold * y_norm {
        return Ok(None);
    }
    let (mut est, st) = full_greedy_step(y, ctx, Some(state))?;
    est.reacquired = true;
    est.solver_report.op_count += report.op_count;
    Ok(Some((est, st)))
}

/// Correlation-aware step: CoSaMP over the reduced dictionary around the
/// previous block's angles.
pub fn algorithm1_step(
    y: &[C64],
    state: &TrackerState,
    ctx: &TrackingContext,
) -> Result<(BlockEstimate, TrackerState), EstimatorError> {
    let (dict, build_ops) = next_reduced_dictionary(state, ctx)?;
    let report = cosamp(&dict.phi, y, &ctx.params.cosamp)?;
    if let Some(mut out) = maybe_reacquire(y, ctx, state, &report)? {
        out.0.dictionary_ops += build_ops;
        return Ok(out);
    }
    finish_block(
        state.block_index + 1,
        y,
        report,
        Arc::new(dict),
        build_ops,
        false,
        Some(state),
        ctx.params.paths,
    )
}

/// Re-expresses the previous estimate in `dict`: each previous path moves to the
/// nearest grid pair, keeping its gain.
pub fn remap_warm_start(state: &TrackerState, dict: &Dictionary) -> Result<SparseVector, EstimatorError> {
    let pairs = state
        .last_paths
        .iter()
        .filter(|p| p.gain.norm_sqr() > 0.0)
        .map(|p| (dict.nearest(p.aod, p.aoa), p.gain));
    Ok(SparseVector::from_pairs(dict.cols(), pairs)?)
}

/// Sparsity-aware step: IHT over the reduced dictionary from the remapped
/// previous estimate.
pub fn algorithm2_step(
    y: &[C64],
    state: &TrackerState,
    ctx: &TrackingContext,
) -> Result<(BlockEstimate, TrackerState), EstimatorError> {
    let (dict, build_ops) = next_reduced_dictionary(state, ctx)?;
    let z0 = remap_warm_start(state, &dict)?;
    let report = iht(&dict.phi, y, &z0, &ctx.params.iht)?;
    if let Some(mut out) = maybe_reacquire(y, ctx, state, &report)? {
        out.0.dictionary_ops += build_ops;
        return Ok(out);
    }
    finish_block(
        state.block_index + 1,
        y,
        report,
        Arc::new(dict),
        build_ops,
        false,
        Some(state),
        ctx.params.paths,
    )
}

/// Runs `kind` over blocks `2..` given the block-1 estimate and its state.
pub fn continue_tracking(
    first: (BlockEstimate, TrackerState),
    rest: &[ComplexVector],
    kind: EstimatorKind,
    ctx: &TrackingContext,
) -> Result<Vec<BlockEstimate>, EstimatorError> {
    let (est, mut state) = first;
    let mut out = Vec::with_capacity(rest.len() + 1);
    out.push(est);
    for y in rest {
        let (e, s) = match kind {
            EstimatorKind::FullGreedy => full_greedy_step(y, ctx, Some(&state))?,
            EstimatorKind::CorrelationAware => algorithm1_step(y, &state, ctx)?,
            EstimatorKind::SparsityAware => algorithm2_step(y, &state, ctx)?,
        };
        out.push(e);
        state = s;
    }
    Ok(out)
}

/// Tracks one realization: block 1 with the full dictionary, later blocks with
/// `kind`. Returns one estimate per measurement.
pub fn track(
    measurements: &[ComplexVector],
    kind: EstimatorKind,
    ctx: &TrackingContext,
) -> Result<Vec<BlockEstimate>, EstimatorError> {
    ctx.params.validate()?;
    let Some((y1, rest)) = measurements.split_first() else {
        return Err(EstimatorError::InvalidParam {
            field: "blocks",
            reason: "need at least one block".into(),
        });
    };
    let first = full_greedy_step(y1, ctx, None)?;
    continue_tracking(first, rest, kind, ctx)
}

/// The true sparse vector in `dict` coordinates, for error measurement.
///
/// Each true path is snapped to the nearest atom (aliased atoms count as one) and
/// carries its true gain. A path outside the region the dictionary covers cannot
/// be represented; it occupies a private slot past the last column, so an
/// estimate always pays its full energy. The result has `cols + L` entries.
pub fn true_sparse_vector(truth: &ChannelState, dict: &Dictionary) -> Result<SparseVector, EstimatorError> {
    let cols = dict.cols();
    let l = truth.gains.len();
    let pairs = truth.aods.iter().zip(&truth.aoas).zip(truth.gains.iter()).enumerate().map(
        |(i, ((&aod, &aoa), &g))| match dict.snap(aod, aoa) {
            Some(k) => (dict.canonical_index(k), g),
            None => (cols + i, g),
        },
    );
    Ok(SparseVector::from_pairs(cols + l, pairs)?)
}

/// An estimate in the same `cols + L` coordinates as [`true_sparse_vector`].
pub fn comparable_estimate(z: &SparseVector, dict: &Dictionary, paths: usize) -> Result<SparseVector, EstimatorError> {
    let pairs = z.iter().map(|(k, g)| (dict.canonical_index(k), g));
    Ok(SparseVector::from_pairs(dict.cols() + paths, pairs)?)
}
