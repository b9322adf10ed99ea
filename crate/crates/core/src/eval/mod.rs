//! Error and rate metrics, Monte Carlo experiments and complexity accounting.

mod complexity;
mod experiment;
mod metrics;

use thiserror::Error;

pub use complexity::{complexity_report, predicted_ops, ComplexityRow};
pub use experiment::{
    run_complexity_experiment, run_mse_experiment, run_rate_experiment, simulate_stream, BlockStream, CellParameters,
    ExperimentKind, ExperimentRecord, ModelConfig, MseExperimentConfig, MseSummary, NoiseScenario, OpCounts,
    RateExperimentConfig, RateSummary, ScenarioLabel, PERFECT_CSI,
};
pub use metrics::{
    achievable_rate, beamforming_gain, constant_modulus, from_db, make_beamformers, mse, rate_from_gain, to_db,
    BeamDirections, BeamformingLink,
};

use crate::channel::ChannelError;
use crate::estimators::EstimatorError;
use crate::numerics::NumericsError;
use crate::sensing::SensingError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("invalid experiment setting `{field}`: {reason}")]
    InvalidConfig { field: &'static str, reason: String },
    #[error("sequence length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("{0}: empty input")]
    Empty(&'static str),
    #[error("beamformer `{which}` has norm {norm}, expected 1")]
    NotUnitNorm { which: &'static str, norm: f64 },
    #[error("estimators in one cell saw different measurement streams")]
    StreamMismatch,
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Sensing(#[from] SensingError),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}
