//! Run configuration: a flat TOML document, command-line overrides and the
//! per-experiment defaults.

use std::path::Path;

use mmwave_cs::estimators::EstimatorKind;
use mmwave_cs::eval::{ModelConfig, MseExperimentConfig, NoiseScenario, RateExperimentConfig};
use mmwave_cs::sensing::TrainingScheme;
use mmwave_cs::solvers::SolverConfig;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Mse,
    Rate,
    Complexity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

/// Every configurable key; absent keys fall back to the experiment defaults.
///
/// The same struct receives the config file and the command-line overrides, and
/// [`ConfigOverrides::merge`] lays one over the other.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigOverrides {
    pub experiment: Option<Experiment>,
    pub format: Option<OutputFormat>,
    pub n_t: Option<usize>,
    pub n_r: Option<usize>,
    pub paths: Option<usize>,
    pub g_t: Option<usize>,
    pub g_r: Option<usize>,
    pub g_bar_t: Option<usize>,
    pub g_bar_r: Option<usize>,
    pub delta_deg: Option<f64>,
    pub delta_est_deg: Option<f64>,
    pub rho: Option<f64>,
    pub pathloss: Option<f64>,
    pub scheme: Option<TrainingScheme>,
    pub p_tr: Option<f64>,
    pub blocks: Option<usize>,
    pub realizations: Option<usize>,
    pub seed: Option<u64>,
    pub m: Option<Vec<usize>>,
    /// Training SNRs (mse, complexity) or transmit SNRs (rate), dB.
    pub snr_db: Option<Vec<f64>>,
    pub training_snr_db: Option<f64>,
    pub cosamp_iters: Option<usize>,
    pub cosamp_tol: Option<f64>,
    pub cosamp_refit: Option<bool>,
    pub iht_iters: Option<usize>,
    pub iht_tol: Option<f64>,
    pub iht_step: Option<f64>,
    pub iht_normalize: Option<bool>,
    pub iht_safeguard: Option<bool>,
    pub dedup_grids: Option<bool>,
    pub reacquire_threshold: Option<f64>,
    pub estimators: Option<Vec<String>>,
    pub constant_modulus: Option<bool>,
    pub max_dictionary_mib: Option<u64>,
}

macro_rules! overlay {
    ($dst:ident, $src:ident; $($f:ident),* $(,)?) => {
        $(if $src.$f.is_some() { $dst.$f = $src.$f; })*
    };
}

impl ConfigOverrides {
    pub fn from_toml_str(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.message().to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Values set in `top` win.
    pub fn merge(mut self, top: ConfigOverrides) -> Self {
        overlay!(self, top;
            experiment, format, n_t, n_r, paths, g_t, g_r, g_bar_t, g_bar_r, delta_deg, delta_est_deg, rho,
            pathloss, scheme, p_tr, blocks, realizations, seed, m, snr_db, training_snr_db, cosamp_iters,
            cosamp_tol, cosamp_refit, iht_iters, iht_tol, iht_step, iht_normalize, iht_safeguard, dedup_grids,
            reacquire_threshold, estimators, constant_modulus, max_dictionary_mib,
        );
        self
    }

    /// Fills unset keys from the defaults of the chosen experiment and validates.
    pub fn resolve(self) -> Result<RunConfig, CliError> {
        let experiment = self.experiment.ok_or_else(|| CliError::Field {
            field: "experiment",
            reason: "not set; pass --experiment or set `experiment` in the config file".into(),
        })?;
        let base = RunConfig::defaults(experiment);
        let estimators = match self.estimators {
            Some(names) => names
                .iter()
                .map(|s| {
                    s.parse::<EstimatorKind>()
                        .map_err(|reason| CliError::Field { field: "estimators", reason })
                })
                .collect::<Result<Vec<_>, _>>()?,
            None => base.estimators.clone(),
        };
        let cfg = RunConfig {
            experiment,
            format: self.format.unwrap_or(base.format),
            n_t: self.n_t.unwrap_or(base.n_t),
            n_r: self.n_r.unwrap_or(base.n_r),
            paths: self.paths.unwrap_or(base.paths),
            g_t: self.g_t.unwrap_or(base.g_t),
            g_r: self.g_r.unwrap_or(base.g_r),
            g_bar_t: self.g_bar_t.unwrap_or(base.g_bar_t),
            g_bar_r: self.g_bar_r.unwrap_or(base.g_bar_r),
            delta_deg: self.delta_deg.unwrap_or(base.delta_deg),
            delta_est_deg: self.delta_est_deg.or(base.delta_est_deg),
            rho: self.rho.unwrap_or(base.rho),
            pathloss: self.pathloss.unwrap_or(base.pathloss),
            scheme: self.scheme.unwrap_or(base.scheme),
            p_tr: self.p_tr.unwrap_or(base.p_tr),
            blocks: self.blocks.unwrap_or(base.blocks),
            realizations: self.realizations.unwrap_or(base.realizations),
            seed: self.seed.unwrap_or(base.seed),
            m: self.m.unwrap_or(base.m),
            snr_db: self.snr_db.unwrap_or(base.snr_db),
            training_snr_db: self.training_snr_db.unwrap_or(base.training_snr_db),
            cosamp_iters: self.cosamp_iters.unwrap_or(base.cosamp_iters),
            cosamp_tol: self.cosamp_tol.unwrap_or(base.cosamp_tol),
            cosamp_refit: self.cosamp_refit.unwrap_or(base.cosamp_refit),
            iht_iters: self.iht_iters.unwrap_or(base.iht_iters),
            iht_tol: self.iht_tol.unwrap_or(base.iht_tol),
            iht_step: self.iht_step.unwrap_or(base.iht_step),
            iht_normalize: self.iht_normalize.unwrap_or(base.iht_normalize),
            iht_safeguard: self.iht_safeguard.unwrap_or(base.iht_safeguard),
            dedup_grids: self.dedup_grids.unwrap_or(base.dedup_grids),
            reacquire_threshold: self.reacquire_threshold.or(base.reacquire_threshold),
            estimators,
            constant_modulus: self.constant_modulus.unwrap_or(base.constant_modulus),
            max_dictionary_mib: self.max_dictionary_mib.unwrap_or(base.max_dictionary_mib),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// A fully resolved run. Serializes to the same flat keys it is read from, so
/// the echo in a result file parses back to the identical configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub format: OutputFormat,
    pub n_t: usize,
    pub n_r: usize,
    pub paths: usize,
    pub g_t: usize,
    pub g_r: usize,
    pub g_bar_t: usize,
    pub g_bar_r: usize,
    pub delta_deg: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_est_deg: Option<f64>,
    pub rho: f64,
    pub pathloss: f64,
    pub scheme: TrainingScheme,
    pub p_tr: f64,
    pub blocks: usize,
    pub realizations: usize,
    pub seed: u64,
    pub m: Vec<usize>,
    pub snr_db: Vec<f64>,
    pub training_snr_db: f64,
    pub cosamp_iters: usize,
    pub cosamp_tol: f64,
    pub cosamp_refit: bool,
    pub iht_iters: usize,
    pub iht_tol: f64,
    pub iht_step: f64,
    pub iht_normalize: bool,
    pub iht_safeguard: bool,
    pub dedup_grids: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reacquire_threshold: Option<f64>,
    #[serde(serialize_with = "serialize_estimators")]
    pub estimators: Vec<EstimatorKind>,
    pub constant_modulus: bool,
    pub max_dictionary_mib: u64,
}

fn serialize_estimators<S: serde::Serializer>(v: &[EstimatorKind], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|k| k.label()))
}

impl RunConfig {
    pub fn defaults(experiment: Experiment) -> Self {
        let (model, m, snr_db, training_snr_db, constant_modulus) = match experiment {
            Experiment::Mse | Experiment::Complexity => {
                let d = MseExperimentConfig::default();
                let snr = d.scenarios.iter().map(|s| s.snr_db).collect();
                (d.model, d.m_values, snr, 0.0, false)
            }
            Experiment::Rate => {
                let d = RateExperimentConfig::default();
                (d.model, d.m_values, d.transmit_snr_db, d.training_snr_db, d.constant_modulus)
            }
        };
        Self {
            experiment,
            format: OutputFormat::Csv,
            n_t: model.n_t,
            n_r: model.n_r,
            paths: model.paths,
            g_t: model.g_t,
            g_r: model.g_r,
            g_bar_t: model.g_bar_t,
            g_bar_r: model.g_bar_r,
            delta_deg: model.delta.to_degrees(),
            delta_est_deg: model.delta_est.map(f64::to_degrees),
            rho: model.rho,
            pathloss: model.pathloss,
            scheme: model.scheme,
            p_tr: model.p_tr,
            blocks: model.blocks,
            realizations: model.realizations,
            seed: model.seed,
            m,
            snr_db,
            training_snr_db,
            cosamp_iters: model.cosamp.max_iters,
            cosamp_tol: model.cosamp.residual_tol,
            cosamp_refit: model.cosamp.refit,
            iht_iters: model.iht.max_iters,
            iht_tol: model.iht.residual_tol,
            iht_step: model.iht.step_size,
            iht_normalize: model.iht.normalize_columns,
            iht_safeguard: model.iht.safeguard,
            dedup_grids: model.dedup_grids,
            reacquire_threshold: model.reacquire_threshold,
            estimators: model.estimators,
            constant_modulus,
            max_dictionary_mib: model.max_dictionary_bytes >> 20,
        }
    }

    pub fn model(&self) -> ModelConfig {
        let mut cosamp = SolverConfig::cosamp(self.paths);
        cosamp.max_iters = self.cosamp_iters;
        cosamp.residual_tol = self.cosamp_tol;
        cosamp.refit = self.cosamp_refit;
        let mut iht = SolverConfig::iht(self.paths);
        iht.max_iters = self.iht_iters;
        iht.residual_tol = self.iht_tol;
        iht.step_size = self.iht_step;
        iht.normalize_columns = self.iht_normalize;
        iht.safeguard = self.iht_safeguard;
        ModelConfig {
            n_t: self.n_t,
            n_r: self.n_r,
            paths: self.paths,
            g_t: self.g_t,
            g_r: self.g_r,
            g_bar_t: self.g_bar_t,
            g_bar_r: self.g_bar_r,
            delta: self.delta_deg.to_radians(),
            delta_est: self.delta_est_deg.map(f64::to_radians),
            rho: self.rho,
            pathloss: self.pathloss,
            scheme: self.scheme,
            p_tr: self.p_tr,
            blocks: self.blocks,
            realizations: self.realizations,
            seed: self.seed,
            cosamp,
            iht,
            dedup_grids: self.dedup_grids,
            reacquire_threshold: self.reacquire_threshold,
            estimators: self.estimators.clone(),
            max_dictionary_bytes: self.max_dictionary_mib << 20,
        }
    }

    pub fn scenarios(&self) -> Vec<NoiseScenario> {
        self.snr_db.iter().map(|&s| NoiseScenario::from_snr_db(s)).collect()
    }

    pub fn mse_config(&self) -> MseExperimentConfig {
        MseExperimentConfig {
            model: self.model(),
            m_values: self.m.clone(),
            scenarios: self.scenarios(),
        }
    }

    pub fn rate_config(&self) -> RateExperimentConfig {
        RateExperimentConfig {
            model: self.model(),
            m_values: self.m.clone(),
            training_snr_db: self.training_snr_db,
            transmit_snr_db: self.snr_db.clone(),
            constant_modulus: self.constant_modulus,
        }
    }

    /// Cross-field checks; runs before any computation.
    pub fn validate(&self) -> Result<(), CliError> {
        let field = |field: &'static str, reason: &str| CliError::Field {
            field,
            reason: reason.to_string(),
        };
        if !self.delta_deg.is_finite() || self.delta_deg < 0.0 {
            return Err(field("delta_deg", "must be a finite nonnegative angle in degrees"));
        }
        if self.delta_est_deg.is_some_and(|d| !d.is_finite() || d < 0.0) {
            return Err(field("delta_est_deg", "must be a finite nonnegative angle in degrees"));
        }
        if self.snr_db.is_empty() {
            return Err(field("snr_db", "need at least one SNR point"));
        }
        let mut seen = self.snr_db.clone();
        seen.sort_by(f64::total_cmp);
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return Err(field("snr_db", "SNR points must be distinct"));
        }
        let mut ms = self.m.clone();
        ms.sort_unstable();
        if ms.windows(2).any(|w| w[0] == w[1]) {
            return Err(field("m", "values must be distinct"));
        }
        let checked = match self.experiment {
            Experiment::Mse | Experiment::Complexity => self.mse_config().validate(),
            Experiment::Rate => self.rate_config().validate(),
        };
        checked.map_err(|e| CliError::Config(e.to_string()))
    }

    /// Flat TOML with one key per line.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run configuration is plain data")
    }
}
