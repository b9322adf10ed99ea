//! Monte Carlo orchestration.
//!
//! A cell is one `(M, noise level)` pair. Within a cell every estimator consumes
//! the same channel and measurement stream for each realization. Random streams
//! are keyed by label paths:
//!
//! * training matrices by `(TRAINING, M_T, M_R)`, shared across noise levels;
//! * channels by `(CHANNEL, r)`, shared across all cells, so realization `r` is
//!   the same channel for every `M` and noise level;
//! * measurement noise by `(NOISE, M_T, M_R, snr, r)`.
//!
//! Results therefore do not depend on how realizations are scheduled.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::metrics::{beamforming_gain, from_db, make_beamformers, rate_from_gain, to_db};
use super::EvalError;
use crate::channel::{ChannelParams, ChannelSequence, ChannelState};
use crate::estimators::{
    comparable_estimate, continue_tracking, full_greedy_step, true_sparse_vector, BlockEstimate, EstimatorKind,
    TrackerParams, TrackingContext,
};
use crate::numerics::{principal_svd, ComplexMatrix, ComplexVector, C64};
use crate::rng::child_rng;
use crate::sensing::{full_dictionary, make_training, measure, SensingSetup, TrainingScheme};
use crate::solvers::SolverConfig;

const TAG_TRAINING: u64 = 1;
const TAG_CHANNEL: u64 = 2;
const TAG_NOISE: u64 = 3;

/// Series label of the perfect-CSI reference in rate experiments.
pub const PERFECT_CSI: &str = "perfect-csi";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioLabel {
    High,
    Low,
    Custom,
}

/// Training-phase noise level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseScenario {
    pub label: ScenarioLabel,
    pub snr_db: f64,
}

impl NoiseScenario {
    /// −10 dB training SNR.
    pub fn high() -> Self {
        Self {
            label: ScenarioLabel::High,
            snr_db: -10.0,
        }
    }

    /// 0 dB training SNR.
    pub fn low() -> Self {
        Self {
            label: ScenarioLabel::Low,
            snr_db: 0.0,
        }
    }

    /// Named after its SNR: `-10` and `0` map to the high and low scenarios.
    pub fn from_snr_db(snr_db: f64) -> Self {
        if snr_db == -10.0 {
            Self::high()
        } else if snr_db == 0.0 {
            Self::low()
        } else {
            Self {
                label: ScenarioLabel::Custom,
                snr_db,
            }
        }
    }

    pub fn name(&self) -> String {
        match self.label {
            ScenarioLabel::High => "high".into(),
            ScenarioLabel::Low => "low".into(),
            ScenarioLabel::Custom => format!("snr{}", self.snr_db),
        }
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        let expected = match self.label {
            ScenarioLabel::High => Some(-10.0),
            ScenarioLabel::Low => Some(0.0),
            ScenarioLabel::Custom => None,
        };
        if !self.snr_db.is_finite() || expected.is_some_and(|e| e != self.snr_db) {
            return Err(EvalError::InvalidConfig {
                field: "scenarios",
                reason: format!("scenario {:?} cannot have SNR {} dB", self.label, self.snr_db),
            });
        }
        Ok(())
    }
}

/// Channel, sensing, grid and solver settings shared by all experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub n_t: usize,
    pub n_r: usize,
    pub paths: usize,
    pub g_t: usize,
    pub g_r: usize,
    pub g_bar_t: usize,
    pub g_bar_r: usize,
    /// True angle drift half-width, radians.
    pub delta: f64,
    /// Tracker search half-width, radians; `None` uses `delta`.
    pub delta_est: Option<f64>,
    pub rho: f64,
    pub pathloss: f64,
    pub scheme: TrainingScheme,
    pub p_tr: f64,
    pub blocks: usize,
    pub realizations: usize,
    pub seed: u64,
    pub cosamp: SolverConfig,
    pub iht: SolverConfig,
    pub dedup_grids: bool,
    pub reacquire_threshold: Option<f64>,
    pub estimators: Vec<EstimatorKind>,
    /// Refuse full dictionaries larger than this many bytes.
    pub max_dictionary_bytes: u64,
}

impl ModelConfig {
    /// Tracking-error setting: 32 × 64 antennas, a 2048-atom full dictionary and
    /// 20-atom reduced ones, 3° drift, ρ = 0.8, 20 blocks.
    pub fn mse_defaults() -> Self {
        Self {
            n_t: 32,
            n_r: 64,
            paths: 1,
            g_t: 32,
            g_r: 64,
            g_bar_t: 4,
            g_bar_r: 5,
            delta: 3f64.to_radians(),
            delta_est: None,
            rho: 0.8,
            pathloss: 1.0,
            scheme: TrainingScheme::RandomPhase,
            p_tr: 1.0,
            blocks: 20,
            realizations: 500,
            seed: 1,
            cosamp: SolverConfig::cosamp(1),
            iht: SolverConfig::iht(1),
            dedup_grids: false,
            reacquire_threshold: None,
            estimators: EstimatorKind::ALL.to_vec(),
            max_dictionary_bytes: 2 << 30,
        }
    }

    /// Rate setting: 16 antennas per side, 1000-point grids per side, 10-point
    /// reduced grids, ρ = 0.9037, 100 blocks.
    pub fn rate_defaults() -> Self {
        Self {
            n_t: 16,
            n_r: 16,
            g_t: 1000,
            g_r: 1000,
            g_bar_t: 10,
            g_bar_r: 10,
            rho: 0.9037,
            blocks: 100,
            realizations: 200,
            ..Self::mse_defaults()
        }
    }

    pub fn delta_est(&self) -> f64 {
        self.delta_est.unwrap_or(self.delta)
    }

    pub fn channel_params(&self) -> ChannelParams {
        ChannelParams::new(self.n_t, self.n_r, self.paths)
            .with_delta(self.delta)
            .with_rho(self.rho)
            .with_pathloss(self.pathloss)
    }

    pub fn tracker_params(&self) -> TrackerParams {
        let mut p = TrackerParams::new(self.paths, self.g_bar_t, self.g_bar_r, self.delta_est());
        p.dedup_grids = self.dedup_grids;
        p.reacquire_threshold = self.reacquire_threshold;
        p.cosamp = SolverConfig {
            sparsity: self.paths,
            ..self.cosamp.clone()
        };
        p.iht = SolverConfig {
            sparsity: self.paths,
            ..self.iht.clone()
        };
        p
    }

    pub fn validate(&self, m_values: &[usize]) -> Result<(), EvalError> {
        let bad = |field, reason: String| Err(EvalError::InvalidConfig { field, reason });
        self.channel_params().validate()?;
        self.tracker_params().validate()?;
        if self.g_t == 0 || self.g_r == 0 {
            return bad("g_t", "full grid sizes must be positive".into());
        }
        if self.g_bar_t < 2 || self.g_bar_r < 2 {
            return bad("g_bar_t", "reduced grid sizes must be at least 2".into());
        }
        if !(self.p_tr > 0.0 && self.p_tr.is_finite()) {
            return bad("p_tr", "must be finite and positive".into());
        }
        if self.blocks == 0 {
            return bad("blocks", "must be at least 1".into());
        }
        if self.realizations == 0 {
            return bad("realizations", "must be at least 1".into());
        }
        if self.estimators.is_empty() {
            return bad("estimators", "list is empty".into());
        }
        if m_values.is_empty() {
            return bad("m", "list is empty".into());
        }
        for &m in m_values {
            if m == 0 {
                return bad("m", "training vector counts must be positive".into());
            }
            if self.scheme == TrainingScheme::DftSubset && (m > self.n_t || m > self.n_r) {
                return bad("m", format!("DFT-subset training needs M ≤ N, got M = {m}"));
            }
            let bytes = (m * m) as u64 * (self.g_t * self.g_r) as u64 * 16;
            if bytes > self.max_dictionary_bytes {
                return bad(
                    "g_t",
                    format!(
                        "full dictionary for M = {m} needs {bytes} bytes, above the {} byte limit",
                        self.max_dictionary_bytes
                    ),
                );
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MseExperimentConfig {
    pub model: ModelConfig,
    /// `M_T = M_R = M` values.
    pub m_values: Vec<usize>,
    pub scenarios: Vec<NoiseScenario>,
}

impl Default for MseExperimentConfig {
    fn default() -> Self {
        Self {
            model: ModelConfig::mse_defaults(),
            m_values: vec![4, 8, 12, 16],
            scenarios: vec![NoiseScenario::high(), NoiseScenario::low()],
        }
    }
}

impl MseExperimentConfig {
    pub fn validate(&self) -> Result<(), EvalError> {
        self.model.validate(&self.m_values)?;
        if self.scenarios.is_empty() {
            return Err(EvalError::InvalidConfig {
                field: "scenarios",
                reason: "list is empty".into(),
            });
        }
        self.scenarios.iter().try_for_each(NoiseScenario::validate)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateExperimentConfig {
    pub model: ModelConfig,
    pub m_values: Vec<usize>,
    /// SNR of the training phase, dB.
    pub training_snr_db: f64,
    /// `P/σ²` points of the data phase, dB.
    pub transmit_snr_db: Vec<f64>,
    pub constant_modulus: bool,
}

impl Default for RateExperimentConfig {
    fn default() -> Self {
        Self {
            model: ModelConfig::rate_defaults(),
            m_values: vec![4, 8],
            training_snr_db: 0.0,
            transmit_snr_db: vec![-10.0, -5.0, 0.0, 5.0, 10.0],
            constant_modulus: false,
        }
    }
}

impl RateExperimentConfig {
    pub fn validate(&self) -> Result<(), EvalError> {
        self.model.validate(&self.m_values)?;
        if !self.training_snr_db.is_finite() {
            return Err(EvalError::InvalidConfig {
                field: "training_snr_db",
                reason: "must be finite".into(),
            });
        }
        if self.transmit_snr_db.is_empty() || self.transmit_snr_db.iter().any(|s| !s.is_finite()) {
            return Err(EvalError::InvalidConfig {
                field: "transmit_snr_db",
                reason: "need at least one finite SNR point".into(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Mse,
    Rate,
    Complexity,
}

/// Everything needed to identify and rerun one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellParameters {
    pub n_t: usize,
    pub n_r: usize,
    pub paths: usize,
    pub m_t: usize,
    pub m_r: usize,
    pub g_t: usize,
    pub g_r: usize,
    pub g_bar_t: usize,
    pub g_bar_r: usize,
    pub delta_deg: f64,
    pub delta_est_deg: f64,
    pub rho: f64,
    pub pathloss: f64,
    pub scheme: TrainingScheme,
    pub scenario: String,
    pub training_snr_db: f64,
    pub transmit_snr_db: Option<f64>,
    pub blocks: usize,
    pub realizations: usize,
    pub seed: u64,
    pub cosamp_iters: usize,
    pub iht_iters: usize,
}

/// Tracking error of one series in one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MseSummary {
    /// Squared error per block, averaged over realizations.
    pub per_block: Vec<f64>,
    /// Mean of `per_block`.
    pub mean: f64,
    /// `10 log10(mean)`.
    pub mean_db: f64,
    /// Block-averaged squared error of each realization.
    pub per_realization: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSummary {
    pub transmit_snr_db: f64,
    /// Rate averaged over blocks and realizations, bits/s/Hz.
    pub mean_bps_hz: f64,
    /// Block-averaged rate of each realization.
    pub per_realization: Vec<f64>,
}

/// Operation tallies, averaged over realizations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpCounts {
    /// Solver MACs per block.
    pub per_block_solver: Vec<f64>,
    /// Dictionary construction MACs per block.
    pub per_block_dictionary: Vec<f64>,
    /// Dictionary columns per block.
    pub per_block_columns: Vec<f64>,
    /// Solver iterations per block.
    pub per_block_iterations: Vec<f64>,
    /// Blocks that fell back to the full dictionary, summed over realizations.
    pub reacquisitions: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub experiment: ExperimentKind,
    /// Estimator label, or [`PERFECT_CSI`].
    pub series: String,
    pub parameters: CellParameters,
    pub mse: Option<MseSummary>,
    pub rate: Option<RateSummary>,
    pub op_counts: Option<OpCounts>,
    /// SHA-256 over every realization's channel and measurement stream.
    pub stream_digest: String,
}

impl ExperimentRecord {
    pub fn mean_mse_db(&self) -> Option<f64> {
        self.mse.as_ref().map(|m| m.mean_db)
    }

    pub fn mean_rate_bps_hz(&self) -> Option<f64> {
        self.rate.as_ref().map(|r| r.mean_bps_hz)
    }
}

/// One realization's channel blocks and measurements.
#[derive(Debug, Clone)]
pub struct BlockStream {
    pub states: Vec<ChannelState>,
    pub measurements: Vec<ComplexVector>,
    /// SHA-256 over the channel matrices and the measurements.
    pub digest: [u8; 32],
}

fn hash_complex(h: &mut Sha256, xs: &[C64]) {
    for z in xs {
        h.update(z.re.to_le_bytes());
        h.update(z.im.to_le_bytes());
    }
}

fn measurement_digest(states: &[ChannelState], ys: &[ComplexVector]) -> [u8; 32] {
    let mut h = Sha256::new();
    for s in states {
        hash_complex(&mut h, s.h.as_slice());
    }
    for y in ys {
        hash_complex(&mut h, y);
    }
    h.finalize().into()
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn snr_label(snr_db: f64) -> u64 {
    snr_db.to_bits()
}

/// Generates realization `r` of a cell: `blocks` channel blocks and their noisy
/// measurements.
pub fn simulate_stream(
    params: &ChannelParams,
    setup: &SensingSetup,
    blocks: usize,
    seed: u64,
    training_snr_db: f64,
    r: usize,
) -> Result<BlockStream, EvalError> {
    let chan_rng = child_rng(seed, &[TAG_CHANNEL, r as u64]);
    let mut noise_rng = child_rng(
        seed,
        &[TAG_NOISE, setup.m_t() as u64, setup.m_r() as u64, snr_label(training_snr_db), r as u64],
    );
    let states: Vec<ChannelState> = ChannelSequence::new(params, chan_rng)
        .take(blocks)
        .collect::<Result<_, _>>()?;
    let measurements = states
        .iter()
        .map(|s| measure(&s.h, setup, &mut noise_rng))
        .collect::<Result<Vec<_>, _>>()?;
    let digest = measurement_digest(&states, &measurements);
    Ok(BlockStream {
        states,
        measurements,
        digest,
    })
}

fn cell_context(model: &ModelConfig, m: usize, training_snr_db: f64) -> Result<TrackingContext, EvalError> {
    let sigma2 = model.p_tr / from_db(training_snr_db);
    let mut rng = child_rng(model.seed, &[TAG_TRAINING, m as u64, m as u64]);
    let setup = make_training(model.n_t, model.n_r, m, m, model.scheme, model.p_tr, sigma2, &mut rng)?;
    let full = full_dictionary(&setup, model.n_t, model.n_r, model.g_t, model.g_r)?;
    Ok(TrackingContext {
        setup: Arc::new(setup),
        full: Arc::new(full),
        params: model.tracker_params(),
    })
}

/// All requested estimators over one stream. Block 1 is solved once and handed
/// to every tracker.
fn run_trackers(
    stream: &BlockStream,
    kinds: &[EstimatorKind],
    ctx: &TrackingContext,
) -> Result<Vec<Vec<BlockEstimate>>, EvalError> {
    let (y1, rest) = stream
        .measurements
        .split_first()
        .ok_or(EvalError::Empty("measurement stream"))?;
    let first = full_greedy_step(y1, ctx, None)?;
    kinds
        .iter()
        .map(|&k| {
            if measurement_digest(&stream.states, &stream.measurements) != stream.digest {
                return Err(EvalError::StreamMismatch);
            }
            Ok(continue_tracking(first.clone(), rest, k, ctx)?)
        })
        .collect()
}

/// Whether and how to beamform on each block's estimate.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Beams {
    Skip,
    Exact,
    ConstantModulus,
}

struct SeriesTally {
    sq_err: Vec<f64>,
    solver_ops: Vec<u64>,
    dict_ops: Vec<u64>,
    columns: Vec<u64>,
    iterations: Vec<u64>,
    reacquired: u64,
    gains: Vec<f64>,
}

fn tally(
    stream: &BlockStream,
    estimates: &[BlockEstimate],
    paths: usize,
    beams: Beams,
) -> Result<SeriesTally, EvalError> {
    let mut t = SeriesTally {
        sq_err: Vec::with_capacity(estimates.len()),
        solver_ops: Vec::with_capacity(estimates.len()),
        dict_ops: Vec::with_capacity(estimates.len()),
        columns: Vec::with_capacity(estimates.len()),
        iterations: Vec::with_capacity(estimates.len()),
        reacquired: 0,
        gains: Vec::new(),
    };
    for (truth, est) in stream.states.iter().zip(estimates) {
        let z = true_sparse_vector(truth, &est.dictionary)?;
        let z_hat = comparable_estimate(&est.solver_report.estimate, &est.dictionary, paths)?;
        t.sq_err.push(z.distance_sqr(&z_hat)?);
        t.solver_ops.push(est.solver_report.op_count);
        t.dict_ops.push(est.dictionary_ops);
        t.columns.push(est.dictionary.cols() as u64);
        t.iterations.push(est.solver_report.iterations_used as u64);
        t.reacquired += est.reacquired as u64;
        if beams != Beams::Skip {
            let b = make_beamformers(&est.h_hat, beams == Beams::ConstantModulus);
            t.gains.push(beamforming_gain(&truth.h, &b.u, &b.v));
        }
    }
    Ok(t)
}

fn mean_over(rows: &[&SeriesTally], f: impl Fn(&SeriesTally) -> &Vec<u64>) -> Vec<f64> {
    let b = f(rows[0]).len();
    (0..b)
        .map(|n| rows.iter().map(|t| f(t)[n]).sum::<u64>() as f64 / rows.len() as f64)
        .collect()
}

fn summarize_mse(rows: &[&SeriesTally]) -> MseSummary {
    let r = rows.len() as f64;
    let b = rows[0].sq_err.len();
    let per_block: Vec<f64> = (0..b).map(|n| rows.iter().map(|t| t.sq_err[n]).sum::<f64>() / r).collect();
    let mean = per_block.iter().sum::<f64>() / b as f64;
    MseSummary {
        mean_db: to_db(mean),
        mean,
        per_realization: rows.iter().map(|t| t.sq_err.iter().sum::<f64>() / b as f64).collect(),
        per_block,
    }
}

fn summarize_ops(rows: &[&SeriesTally]) -> OpCounts {
    OpCounts {
        per_block_solver: mean_over(rows, |t| &t.solver_ops),
        per_block_dictionary: mean_over(rows, |t| &t.dict_ops),
        per_block_columns: mean_over(rows, |t| &t.columns),
        per_block_iterations: mean_over(rows, |t| &t.iterations),
        reacquisitions: rows.iter().map(|t| t.reacquired).sum(),
    }
}

fn cell_digest(streams: &[[u8; 32]]) -> String {
    let mut h = Sha256::new();
    for d in streams {
        h.update(d);
    }
    hex(&h.finalize())
}

fn cell_parameters(model: &ModelConfig, m: usize, scenario: &NoiseScenario) -> CellParameters {
    CellParameters {
        n_t: model.n_t,
        n_r: model.n_r,
        paths: model.paths,
        m_t: m,
        m_r: m,
        g_t: model.g_t,
        g_r: model.g_r,
        g_bar_t: model.g_bar_t,
        g_bar_r: model.g_bar_r,
        delta_deg: model.delta.to_degrees(),
        delta_est_deg: model.delta_est().to_degrees(),
        rho: model.rho,
        pathloss: model.pathloss,
        scheme: model.scheme,
        scenario: scenario.name(),
        training_snr_db: scenario.snr_db,
        transmit_snr_db: None,
        blocks: model.blocks,
        realizations: model.realizations,
        seed: model.seed,
        cosamp_iters: model.cosamp.max_iters,
        iht_iters: model.iht.max_iters,
    }
}

struct RealizationOutcome {
    digest: [u8; 32],
    series: Vec<SeriesTally>,
    perfect_gains: Vec<f64>,
}

fn run_cell(
    model: &ModelConfig,
    m: usize,
    training_snr_db: f64,
    beams: Beams,
) -> Result<Vec<RealizationOutcome>, EvalError> {
    let ctx = cell_context(model, m, training_snr_db)?;
    let params = model.channel_params();
    (0..model.realizations)
        .into_par_iter()
        .map(|r| {
            let stream = simulate_stream(&params, &ctx.setup, model.blocks, model.seed, training_snr_db, r)?;
            let runs = run_trackers(&stream, &model.estimators, &ctx)?;
            let series = runs
                .iter()
                .map(|est| tally(&stream, est, model.paths, beams))
                .collect::<Result<Vec<_>, _>>()?;
            let perfect_gains = if beams != Beams::Skip {
                stream.states.iter().map(|s| perfect_gain(&s.h)).collect()
            } else {
                Vec::new()
            };
            Ok(RealizationOutcome {
                digest: stream.digest,
                series,
                perfect_gains,
            })
        })
        .collect()
}

/// Tracking error for every `(scenario, M, estimator)`.
pub fn run_mse_experiment(cfg: &MseExperimentConfig) -> Result<Vec<ExperimentRecord>, EvalError> {
    cfg.validate()?;
    let mut records = Vec::new();
    for scenario in &cfg.scenarios {
        for &m in &cfg.m_values {
            let outcomes = run_cell(&cfg.model, m, scenario.snr_db, Beams::Skip)?;
            let digest = cell_digest(&outcomes.iter().map(|o| o.digest).collect::<Vec<_>>());
            for (i, kind) in cfg.model.estimators.iter().enumerate() {
                let rows: Vec<&SeriesTally> = outcomes.iter().map(|o| &o.series[i]).collect();
                records.push(ExperimentRecord {
                    experiment: ExperimentKind::Mse,
                    series: kind.label().to_string(),
                    parameters: cell_parameters(&cfg.model, m, scenario),
                    mse: Some(summarize_mse(&rows)),
                    rate: None,
                    op_counts: Some(summarize_ops(&rows)),
                    stream_digest: digest.clone(),
                });
            }
        }
    }
    Ok(records)
}

/// The MSE experiment with every solver forced through all of its iterations,
/// so operation counts reflect the nominal iteration budget.
pub fn run_complexity_experiment(cfg: &MseExperimentConfig) -> Result<Vec<ExperimentRecord>, EvalError> {
    let mut cfg = cfg.clone();
    cfg.model.cosamp.exhaust_iterations = true;
    cfg.model.iht.exhaust_iterations = true;
    let mut records = run_mse_experiment(&cfg)?;
    for r in &mut records {
        r.experiment = ExperimentKind::Complexity;
    }
    Ok(records)
}

fn rate_summary(per_block_gains: &[&Vec<f64>], snr_db: f64) -> RateSummary {
    let snr = from_db(snr_db);
    let per_realization: Vec<f64> = per_block_gains
        .iter()
        .map(|g| g.iter().map(|&x| rate_from_gain(x, snr)).sum::<f64>() / g.len() as f64)
        .collect();
    RateSummary {
        transmit_snr_db: snr_db,
        mean_bps_hz: per_realization.iter().sum::<f64>() / per_realization.len() as f64,
        per_realization,
    }
}

/// Mean achievable rate against transmit SNR for every `(M, estimator)` plus the
/// perfect-CSI reference. The beamformers of each block come from that block's
/// estimate; every SNR point reuses the same estimates.
pub fn run_rate_experiment(cfg: &RateExperimentConfig) -> Result<Vec<ExperimentRecord>, EvalError> {
    cfg.validate()?;
    let scenario = NoiseScenario::from_snr_db(cfg.training_snr_db);
    let mut records = Vec::new();
    for &m in &cfg.m_values {
        let beams = if cfg.constant_modulus { Beams::ConstantModulus } else { Beams::Exact };
        let outcomes = run_cell(&cfg.model, m, cfg.training_snr_db, beams)?;
        let digest = cell_digest(&outcomes.iter().map(|o| o.digest).collect::<Vec<_>>());
        for &snr_db in &cfg.transmit_snr_db {
            let mut params = cell_parameters(&cfg.model, m, &scenario);
            params.transmit_snr_db = Some(snr_db);
            let perfect: Vec<&Vec<f64>> = outcomes.iter().map(|o| &o.perfect_gains).collect();
            records.push(ExperimentRecord {
                experiment: ExperimentKind::Rate,
                series: PERFECT_CSI.to_string(),
                parameters: params.clone(),
                mse: None,
                rate: Some(rate_summary(&perfect, snr_db)),
                op_counts: None,
                stream_digest: digest.clone(),
            });
            for (i, kind) in cfg.model.estimators.iter().enumerate() {
                let rows: Vec<&SeriesTally> = outcomes.iter().map(|o| &o.series[i]).collect();
                let gains: Vec<&Vec<f64>> = rows.iter().map(|t| &t.gains).collect();
                records.push(ExperimentRecord {
                    experiment: ExperimentKind::Rate,
                    series: kind.label().to_string(),
                    parameters: params.clone(),
                    mse: Some(summarize_mse(&rows)),
                    rate: Some(rate_summary(&gains, snr_db)),
                    op_counts: Some(summarize_ops(&rows)),
                    stream_digest: digest.clone(),
                });
            }
        }
    }
    Ok(records)
}

/// Perfect-CSI beamforming gain of one channel matrix, `σ₁(H)²`.
fn perfect_gain(h: &ComplexMatrix) -> f64 {
    principal_svd(h).sigma.powi(2)
}
