//! Command-line driver: configuration, experiment execution and result files.

pub mod config;
pub mod output;

use std::path::{Path, PathBuf};

use clap::Parser;
use mmwave_cs::eval::{run_complexity_experiment, run_mse_experiment, run_rate_experiment, EvalError, ExperimentRecord};
use mmwave_cs::sensing::TrainingScheme;
use thiserror::Error;

pub use config::{ConfigOverrides, Experiment, OutputFormat, RunConfig};
pub use output::{config_from_result, plot_table, summary_table, PlotTable, ResultFile, RunStatus};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("invalid `{field}`: {reason}")]
    Field { field: &'static str, reason: String },
    #[error("i/o: {0}")]
    Io(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Field { .. } => 2,
            Self::Eval(EvalError::InvalidConfig { .. }) => 2,
            Self::Io(_) | Self::Eval(_) => 1,
        }
    }
}

/// Monte Carlo experiments for compressed-sensing mmWave channel tracking.
///
/// Settings come from built-in defaults for the chosen experiment, then the
/// config file, then individual flags. Angles are in degrees, SNRs in dB.
#[derive(Debug, Parser)]
#[command(name = "mmwave-cs", version)]
pub struct Cli {
    /// Which experiment to run.
    #[arg(long, value_enum)]
    pub experiment: Option<Experiment>,
    /// Flat TOML file of settings.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Reuse the configuration embedded in an earlier result file.
    #[arg(long, conflicts_with = "config")]
    pub from_result: Option<PathBuf>,
    /// Result file; defaults to `<experiment>.<format>`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Result file format.
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
    /// Also write a long-format plot table (CSV) here.
    #[arg(long)]
    pub plot_out: Option<PathBuf>,
    /// Suppress the summary table.
    #[arg(long)]
    pub quiet: bool,

    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Monte Carlo realizations per cell.
    #[arg(long)]
    pub realizations: Option<usize>,
    /// Channel blocks per realization.
    #[arg(long)]
    pub blocks: Option<usize>,
    /// Training vectors per side, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub m: Option<Vec<usize>>,
    /// Training SNRs (mse, complexity) or transmit SNRs (rate), comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub snr_db: Option<Vec<f64>>,
    /// Training SNR of the rate experiment.
    #[arg(long, allow_hyphen_values = true)]
    pub training_snr_db: Option<f64>,
    /// Per-block angle drift bound.
    #[arg(long)]
    pub delta_deg: Option<f64>,
    /// Drift bound assumed by the trackers; defaults to the true one.
    #[arg(long)]
    pub delta_est_deg: Option<f64>,
    /// Block-to-block gain correlation.
    #[arg(long)]
    pub rho: Option<f64>,
    /// Average pathloss; path gains have variance n_t·n_r/pathloss.
    #[arg(long)]
    pub pathloss: Option<f64>,
    /// Training power.
    #[arg(long)]
    pub p_tr: Option<f64>,
    /// Transmit antennas.
    #[arg(long)]
    pub n_t: Option<usize>,
    /// Receive antennas.
    #[arg(long)]
    pub n_r: Option<usize>,
    /// Propagation paths.
    #[arg(long)]
    pub paths: Option<usize>,
    /// Full AoD grid size.
    #[arg(long)]
    pub g_t: Option<usize>,
    /// Full AoA grid size.
    #[arg(long)]
    pub g_r: Option<usize>,
    /// Reduced AoD grid points per path.
    #[arg(long)]
    pub g_bar_t: Option<usize>,
    /// Reduced AoA grid points per path.
    #[arg(long)]
    pub g_bar_r: Option<usize>,
    /// random-phase or dft-subset.
    #[arg(long)]
    pub scheme: Option<TrainingScheme>,
    /// CoSaMP iterations.
    #[arg(long)]
    pub cosamp_iters: Option<usize>,
    /// IHT iterations.
    #[arg(long)]
    pub iht_iters: Option<usize>,
    /// IHT step size.
    #[arg(long)]
    pub iht_step: Option<f64>,
    /// Run IHT on the column-normalized dictionary.
    #[arg(long)]
    pub iht_normalize: Option<bool>,
    /// Shrink the IHT step when the residual grows.
    #[arg(long)]
    pub iht_safeguard: Option<bool>,
    /// Relative residual above which a tracker falls back to the full dictionary.
    #[arg(long)]
    pub reacquire_threshold: Option<f64>,
    /// Estimator labels, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub estimators: Option<Vec<String>>,
    /// Project beamformers onto constant-modulus entries.
    #[arg(long)]
    pub constant_modulus: Option<bool>,
}

impl Cli {
    fn overrides(&self) -> ConfigOverrides {
        ConfigOverrides {
            experiment: self.experiment,
            format: self.format,
            n_t: self.n_t,
            n_r: self.n_r,
            paths: self.paths,
            g_t: self.g_t,
            g_r: self.g_r,
            g_bar_t: self.g_bar_t,
            g_bar_r: self.g_bar_r,
            delta_deg: self.delta_deg,
            delta_est_deg: self.delta_est_deg,
            rho: self.rho,
            pathloss: self.pathloss,
            scheme: self.scheme,
            p_tr: self.p_tr,
            blocks: self.blocks,
            realizations: self.realizations,
            seed: self.seed,
            m: self.m.clone(),
            snr_db: self.snr_db.clone(),
            training_snr_db: self.training_snr_db,
            cosamp_iters: self.cosamp_iters,
            iht_iters: self.iht_iters,
            iht_step: self.iht_step,
            iht_normalize: self.iht_normalize,
            iht_safeguard: self.iht_safeguard,
            reacquire_threshold: self.reacquire_threshold,
            estimators: self.estimators.clone(),
            constant_modulus: self.constant_modulus,
            ..Default::default()
        }
    }

    /// Defaults, then the file, then the flags.
    pub fn run_config(&self) -> Result<RunConfig, CliError> {
        let base = if let Some(path) = &self.config {
            ConfigOverrides::from_file(path)?
        } else if let Some(path) = &self.from_result {
            let text =
                std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            config_from_result(&text)?
        } else {
            ConfigOverrides::default()
        };
        base.merge(self.overrides()).resolve()
    }

    pub fn out_path(&self, cfg: &RunConfig) -> PathBuf {
        self.out.clone().unwrap_or_else(|| {
            let stem = match cfg.experiment {
                Experiment::Mse => "mse",
                Experiment::Rate => "rate",
                Experiment::Complexity => "complexity",
            };
            let ext = match cfg.format {
                OutputFormat::Csv => "csv",
                OutputFormat::Json => "json",
            };
            PathBuf::from(format!("{stem}.{ext}"))
        })
    }
}

/// One unit of work whose records are flushed as soon as it finishes.
fn cells(cfg: &RunConfig) -> Vec<RunConfig> {
    match cfg.experiment {
        Experiment::Mse | Experiment::Complexity => cfg
            .snr_db
            .iter()
            .flat_map(|&s| {
                cfg.m.iter().map(move |&m| RunConfig {
                    snr_db: vec![s],
                    m: vec![m],
                    ..cfg.clone()
                })
            })
            .collect(),
        Experiment::Rate => cfg
            .m
            .iter()
            .map(|&m| RunConfig {
                m: vec![m],
                ..cfg.clone()
            })
            .collect(),
    }
}

fn run_one(cell: &RunConfig) -> Result<Vec<ExperimentRecord>, EvalError> {
    match cell.experiment {
        Experiment::Mse => run_mse_experiment(&cell.mse_config()),
        Experiment::Complexity => run_complexity_experiment(&cell.mse_config()),
        Experiment::Rate => run_rate_experiment(&cell.rate_config()),
    }
}

/// Runs the experiment cell by cell. After each cell the result file is
/// rewritten with a `partial` status; the last write marks it `complete`. A run
/// that fails or is interrupted leaves the partial file in place.
pub fn run(cfg: &RunConfig, out: &Path) -> Result<Vec<ExperimentRecord>, CliError> {
    run_with_hook(cfg, out, |_| Ok(()))
}

/// [`run`] with a callback after each flushed cell; an error from the callback
/// aborts the run.
pub fn run_with_hook(
    cfg: &RunConfig,
    out: &Path,
    mut after_cell: impl FnMut(usize) -> Result<(), CliError>,
) -> Result<Vec<ExperimentRecord>, CliError> {
    cfg.validate()?;
    let mut records = Vec::new();
    let write = |records: &[ExperimentRecord], status| {
        let file = ResultFile {
            version: output::VERSION,
            status,
            config: cfg,
            records,
        };
        output::write_atomic(out, &file.render(cfg.format))
    };
    write(&records, RunStatus::Partial)?;
    for (i, cell) in cells(cfg).iter().enumerate() {
        records.extend(run_one(cell)?);
        write(&records, RunStatus::Partial)?;
        after_cell(i)?;
    }
    write(&records, RunStatus::Complete)?;
    Ok(records)
}

/// Entry point shared by the binary and the tests; returns the exit status.
pub fn main_with(cli: &Cli) -> Result<(), CliError> {
    let cfg = cli.run_config()?;
    let out = cli.out_path(&cfg);
    let records = run(&cfg, &out)?;
    if let Some(path) = &cli.plot_out {
        output::write_atomic(path, &plot_table(&records).to_csv())?;
    }
    if !cli.quiet {
        print!("{}", summary_table(&records));
        println!("wrote {}", out.display());
    }
    Ok(())
}
