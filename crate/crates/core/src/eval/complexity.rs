//! Measured operation counts against the leading-order cost formulas.

use serde::{Deserialize, Serialize};

use super::experiment::{ExperimentRecord, PERFECT_CSI};
use crate::estimators::EstimatorKind;

/// One row per `(series, M, scenario)` of tracking-phase costs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityRow {
    pub series: String,
    pub m_t: usize,
    pub m_r: usize,
    pub scenario: String,
    /// Nominal dictionary columns of a tracking block.
    pub columns: usize,
    /// Solver MACs per tracking block (blocks 2..B), averaged.
    pub measured_per_block: f64,
    /// Leading-order formula per block.
    pub predicted_per_block: f64,
    pub measured_over_predicted: f64,
    /// Mean solver iterations per tracking block.
    pub mean_iterations: f64,
}

/// Leading-order MACs of one tracking block:
///
/// * full greedy `K (G_T G_R (M_T M_R + 1) + 2 M_T M_R)`;
/// * correlation-aware `K (L² Ḡ_T Ḡ_R (M_T M_R + 1) + 2 M_T M_R)`;
/// * sparsity-aware `I L² Ḡ_T Ḡ_R (M_T M_R + 1)`.
pub fn predicted_ops(kind: EstimatorKind, columns: usize, measurements: usize, iterations: usize) -> f64 {
    let (c, m, k) = (columns as f64, measurements as f64, iterations as f64);
    match kind {
        EstimatorKind::FullGreedy | EstimatorKind::CorrelationAware => k * (c * (m + 1.0) + 2.0 * m),
        EstimatorKind::SparsityAware => k * c * (m + 1.0),
    }
}

/// Tracking-phase cost table for records that carry operation counts. Block 1
/// (always a full-dictionary solve) is excluded; records with a single block use
/// it instead.
pub fn complexity_report(records: &[ExperimentRecord]) -> Vec<ComplexityRow> {
    let mut rows = Vec::new();
    for rec in records {
        let (Some(ops), Ok(kind)) = (&rec.op_counts, rec.series.parse::<EstimatorKind>()) else {
            continue;
        };
        if rec.series == PERFECT_CSI {
            continue;
        }
        let p = &rec.parameters;
        let skip = usize::from(ops.per_block_solver.len() > 1);
        let tracking = &ops.per_block_solver[skip..];
        let measured = tracking.iter().sum::<f64>() / tracking.len() as f64;
        let iters = &ops.per_block_iterations[skip..];
        let mean_iterations = iters.iter().sum::<f64>() / iters.len() as f64;
        let (columns, k) = match kind {
            EstimatorKind::FullGreedy => (p.g_t * p.g_r, p.cosamp_iters),
            EstimatorKind::CorrelationAware => (p.paths * p.paths * p.g_bar_t * p.g_bar_r, p.cosamp_iters),
            EstimatorKind::SparsityAware => (p.paths * p.paths * p.g_bar_t * p.g_bar_r, p.iht_iters),
        };
        let columns = if skip == 0 { p.g_t * p.g_r } else { columns };
        let predicted = predicted_ops(kind, columns, p.m_t * p.m_r, k);
        rows.push(ComplexityRow {
            series: rec.series.clone(),
            m_t: p.m_t,
            m_r: p.m_r,
            scenario: p.scenario.clone(),
            columns,
            measured_per_block: measured,
            predicted_per_block: predicted,
            measured_over_predicted: measured / predicted,
            mean_iterations,
        });
    }
    rows
}
