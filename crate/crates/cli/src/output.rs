//! Result files, plot tables and the terminal summary.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use mmwave_cs::eval::ExperimentRecord;
use serde::{Deserialize, Serialize};

use crate::config::{ConfigOverrides, OutputFormat, RunConfig};
use crate::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Partial,
    Complete,
}

impl RunStatus {
    fn label(self) -> &'static str {
        match self {
            Self::Partial => "partial",
            Self::Complete => "complete",
        }
    }
}

/// Version, status, configuration echo and the records computed so far.
#[derive(Debug, Clone, Serialize)]
pub struct ResultFile<'a> {
    pub version: &'static str,
    pub status: RunStatus,
    pub config: &'a RunConfig,
    pub records: &'a [ExperimentRecord],
}

const CSV_COLUMNS: [&str; 16] = [
    "experiment",
    "series",
    "m_t",
    "m_r",
    "scenario",
    "training_snr_db",
    "transmit_snr_db",
    "block",
    "mse",
    "mse_db",
    "rate_bps_hz",
    "solver_ops",
    "dictionary_ops",
    "columns",
    "iterations",
    "stream_digest",
];

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

impl ResultFile<'_> {
    /// `#` header lines carrying the version, status and configuration, then one
    /// aggregate row per record and, for tracking-error records, one row per block.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        writeln!(out, "# mmwave-cs {}", self.version).unwrap();
        writeln!(out, "# status: {}", self.status.label()).unwrap();
        writeln!(out, "# config:").unwrap();
        for line in self.config.to_toml().lines() {
            writeln!(out, "#   {line}").unwrap();
        }
        writeln!(out, "{}", CSV_COLUMNS.join(",")).unwrap();
        for rec in self.records {
            let p = &rec.parameters;
            let kind = serde_json::to_value(rec.experiment).unwrap();
            let kind = kind.as_str().unwrap_or_default().to_string();
            let lead = [
                kind,
                rec.series.clone(),
                p.m_t.to_string(),
                p.m_r.to_string(),
                p.scenario.clone(),
                p.training_snr_db.to_string(),
                opt(p.transmit_snr_db),
            ]
            .join(",");
            let ops = rec.op_counts.as_ref();
            let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len().max(1) as f64;
            writeln!(
                out,
                "{lead},all,{},{},{},{},{},{},{},{}",
                opt(rec.mse.as_ref().map(|m| m.mean)),
                opt(rec.mse.as_ref().map(|m| m.mean_db)),
                opt(rec.rate.as_ref().map(|r| r.mean_bps_hz)),
                opt(ops.map(|o| mean(&o.per_block_solver))),
                opt(ops.map(|o| mean(&o.per_block_dictionary))),
                opt(ops.map(|o| mean(&o.per_block_columns))),
                opt(ops.map(|o| mean(&o.per_block_iterations))),
                rec.stream_digest,
            )
            .unwrap();
            // Per-block rows do not depend on the transmit SNR; emit them once.
            if rec.rate.is_some() {
                continue;
            }
            if let (Some(m), Some(o)) = (&rec.mse, ops) {
                for (b, &e) in m.per_block.iter().enumerate() {
                    writeln!(
                        out,
                        "{lead},{},{},{},,{},{},{},{},{}",
                        b + 1,
                        e,
                        10.0 * e.log10(),
                        o.per_block_solver[b],
                        o.per_block_dictionary[b],
                        o.per_block_columns[b],
                        o.per_block_iterations[b],
                        rec.stream_digest,
                    )
                    .unwrap();
                }
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("result records are plain data");
        s.push('\n');
        s
    }

    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Csv => self.to_csv(),
            OutputFormat::Json => self.to_json(),
        }
    }
}

/// Writes `contents` next to `path` and renames it into place, so readers never
/// see a half-written file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let mut tmp_name = path.file_name().unwrap_or_default().to_os_string();
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    let mut f = std::fs::File::create(&tmp).map_err(io)?;
    f.write_all(contents.as_bytes()).map_err(io)?;
    f.sync_all().map_err(io)?;
    std::fs::rename(&tmp, path).map_err(io)
}

/// Recovers the configuration embedded in a CSV or JSON result file.
pub fn config_from_result(text: &str) -> Result<ConfigOverrides, CliError> {
    if text.trim_start().starts_with('{') {
        #[derive(Deserialize)]
        struct Header {
            config: ConfigOverrides,
        }
        let h: Header = serde_json::from_str(text).map_err(|e| CliError::Config(format!("result file: {e}")))?;
        return Ok(h.config);
    }
    let mut toml_text = String::new();
    let mut inside = false;
    for line in text.lines() {
        let Some(rest) = line.strip_prefix('#') else {
            break;
        };
        if rest.trim() == "config:" {
            inside = true;
        } else if inside {
            toml_text.push_str(rest.strip_prefix("   ").unwrap_or(rest));
            toml_text.push('\n');
        }
    }
    if !inside {
        return Err(CliError::Config("result file has no embedded configuration".into()));
    }
    ConfigOverrides::from_toml_str(&toml_text)
}

/// A long-format table ready for plotting.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotTable {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl PlotTable {
    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }
}

/// Tracking error against `M` (`M, estimator, scenario, mse_db`) or rate against
/// transmit SNR (`snr_db, estimator, M, N, rate`), by record type.
pub fn plot_table(records: &[ExperimentRecord]) -> PlotTable {
    let is_rate = records.iter().any(|r| r.parameters.transmit_snr_db.is_some());
    if is_rate {
        let rows = records
            .iter()
            .filter_map(|r| {
                let p = &r.parameters;
                let rate = r.rate.as_ref()?;
                let n = if p.n_t == p.n_r {
                    p.n_t.to_string()
                } else {
                    format!("{}x{}", p.n_t, p.n_r)
                };
                Some(vec![
                    rate.transmit_snr_db.to_string(),
                    r.series.clone(),
                    p.m_t.to_string(),
                    n,
                    rate.mean_bps_hz.to_string(),
                ])
            })
            .collect();
        PlotTable {
            columns: vec!["snr_db", "estimator", "M", "N", "rate"],
            rows,
        }
    } else {
        let rows = records
            .iter()
            .filter_map(|r| {
                let m = r.mse.as_ref()?;
                Some(vec![
                    r.parameters.m_t.to_string(),
                    r.series.clone(),
                    r.parameters.scenario.clone(),
                    m.mean_db.to_string(),
                ])
            })
            .collect();
        PlotTable {
            columns: vec!["M", "estimator", "scenario", "mse_db"],
            rows,
        }
    }
}

/// Estimator rows against one column per cell, holding MSE in dB or rate in
/// bits/s/Hz.
pub fn summary_table(records: &[ExperimentRecord]) -> String {
    let cell = |r: &ExperimentRecord| {
        let p = &r.parameters;
        match p.transmit_snr_db {
            Some(s) => format!("M={} {}dB", p.m_t, s),
            None => format!("{} M={}", p.scenario, p.m_t),
        }
    };
    let mut cells: Vec<String> = Vec::new();
    let mut series: Vec<String> = Vec::new();
    for r in records {
        let c = cell(r);
        if !cells.contains(&c) {
            cells.push(c);
        }
        if !series.contains(&r.series) {
            series.push(r.series.clone());
        }
    }
    let metric = if records.iter().any(|r| r.rate.is_some()) {
        "rate, bits/s/Hz"
    } else {
        "MSE, dB"
    };
    let width = cells.iter().map(String::len).max().unwrap_or(0).max(8) + 2;
    let mut out = format!("{metric:<18}");
    for c in &cells {
        write!(out, "{c:>width$}").unwrap();
    }
    out.push('\n');
    for s in &series {
        write!(out, "{s:<18}").unwrap();
        for c in &cells {
            let v = records
                .iter()
                .find(|r| &r.series == s && &cell(r) == c)
                .and_then(|r| r.mean_rate_bps_hz().or(r.mean_mse_db()));
            match v {
                Some(v) => write!(out, "{v:>width$.3}").unwrap(),
                None => write!(out, "{:>width$}", "-").unwrap(),
            }
        }
        out.push('\n');
    }
    out
}
