//! CSV result files and the metadata sidecar.
//!
//! The `run` CSV schema (one row per evaluated cell):
//!
//! `scheme,backend,sweep_variable,sweep_value,se_bits,std_error,trials,a_samples,seed,wall_time_s`
//!
//! `trials` counts Monte Carlo trials (0 on asymptotic rows) and `a_samples`
//! counts A-variable samples (0 on finite rows). `wall_time_s` is the only
//! nondeterministic column; everything else is reproducible from the spec
//! file and seed.
//!
//! The `optimize` CSV schema:
//!
//! `rank,intervals,clusters,zetas,se_bits,std_error,a_samples,seed,wall_time_s`
//!
//! Cell indices in `intervals`/`clusters` are 1-based; zeta values are
//! semicolon-separated.

use std::path::Path;

use mimo_uplink::asymptotic::{clusters_display, intervals_display};
use mimo_uplink::finite::SchemeRateReport;
use mimo_uplink::optimizer::RankedConfiguration;
use serde::Serialize;

use crate::spec::RunSpec;
use crate::CliError;

/// One `run` CSV row.
#[derive(Debug, Clone)]
pub struct RunRow {
    pub scheme: String,
    pub backend: String,
    pub sweep_variable: String,
    pub sweep_value: Option<f64>,
    pub se_bits: f64,
    pub std_error: f64,
    pub trials: usize,
    pub a_samples: usize,
    pub seed: u64,
    pub wall_time_s: f64,
}

impl RunRow {
    pub fn new(
        report: &SchemeRateReport,
        backend: &str,
        sweep_variable: &str,
        sweep_value: Option<f64>,
        trials: usize,
        a_samples: usize,
        wall_time_s: f64,
    ) -> Self {
        RunRow {
            scheme: report.scheme.to_string(),
            backend: backend.to_string(),
            sweep_variable: sweep_variable.to_string(),
            sweep_value,
            se_bits: report.se_bits,
            std_error: report.std_error,
            trials,
            a_samples,
            seed: report.metadata.seed,
            wall_time_s,
        }
    }
}

pub fn write_run_csv(path: &Path, rows: &[RunRow]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| CliError::config(format!("cannot write {}: {e}", path.display())))?;
    w.write_record([
        "scheme",
        "backend",
        "sweep_variable",
        "sweep_value",
        "se_bits",
        "std_error",
        "trials",
        "a_samples",
        "seed",
        "wall_time_s",
    ])
    .map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.scheme.clone(),
            r.backend.clone(),
            r.sweep_variable.clone(),
            r.sweep_value.map_or(String::new(), |v| format!("{v}")),
            format!("{}", r.se_bits),
            format!("{}", r.std_error),
            r.trials.to_string(),
            r.a_samples.to_string(),
            r.seed.to_string(),
            format!("{:.3}", r.wall_time_s),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::config(format!("flush: {e}")))?;
    Ok(())
}

/// One `optimize` CSV row.
#[derive(Debug, Clone)]
pub struct OptimizeRow {
    pub rank: usize,
    pub intervals: String,
    pub clusters: String,
    pub zetas: String,
    pub se_bits: f64,
    pub std_error: f64,
    pub a_samples: usize,
    pub seed: u64,
    pub wall_time_s: f64,
}

impl OptimizeRow {
    pub fn new(row: &RankedConfiguration, a_samples: usize, seed: u64, wall_time_s: f64) -> Self {
        OptimizeRow {
            rank: row.rank,
            intervals: intervals_display(&row.intervals),
            clusters: clusters_display(&row.clusters),
            zetas: row
                .zetas
                .iter()
                .map(|z| format!("{z}"))
                .collect::<Vec<_>>()
                .join(";"),
            se_bits: row.se_bits,
            std_error: row.std_error,
            a_samples,
            seed,
            wall_time_s,
        }
    }
}

pub fn write_optimize_csv(path: &Path, rows: &[OptimizeRow]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| CliError::config(format!("cannot write {}: {e}", path.display())))?;
    w.write_record([
        "rank",
        "intervals",
        "clusters",
        "zetas",
        "se_bits",
        "std_error",
        "a_samples",
        "seed",
        "wall_time_s",
    ])
    .map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.rank.to_string(),
            r.intervals.clone(),
            r.clusters.clone(),
            r.zetas.clone(),
            format!("{}", r.se_bits),
            format!("{}", r.std_error),
            r.a_samples.to_string(),
            r.seed.to_string(),
            format!("{:.3}", r.wall_time_s),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::config(format!("flush: {e}")))?;
    Ok(())
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Config(format!("csv: {e}"))
}

/// Full provenance written next to every result file: the spec echo, tool
/// version, and the numeric design constants in effect.
#[derive(Debug, Serialize)]
pub struct MetadataSidecar {
    pub tool: &'static str,
    pub version: &'static str,
    pub constants: Constants,
    pub spec: RunSpec,
}

#[derive(Debug, Serialize)]
pub struct Constants {
    /// Default user-to-base-station distance clamp in the geometric scenario.
    pub min_distance_default_m: f64,
    /// Residual tolerance of the fixed-point solver.
    pub rmt_tolerance: f64,
    pub rmt_iteration_cap: usize,
    /// Regularization constant of the linear MMSE baseline filter.
    pub mmse_regularization: &'static str,
    /// Shadowing convention applied to the amplitude coefficient.
    pub shadowing: &'static str,
    pub max_optimizer_cells: usize,
}

impl MetadataSidecar {
    pub fn for_spec(spec: &RunSpec) -> Self {
        MetadataSidecar {
            tool: "mimo-uplink",
            version: env!("CARGO_PKG_VERSION"),
            constants: Constants {
                min_distance_default_m: mimo_uplink::network::DEFAULT_MIN_DISTANCE_M,
                rmt_tolerance: mimo_uplink::rmt::DEFAULT_TOLERANCE,
                rmt_iteration_cap: mimo_uplink::rmt::MAX_ITERATIONS,
                mmse_regularization: "T_k (residual power of the modeled uncorrelated noise)",
                shadowing: "amplitude log-normal: Z = 10^(G/20), G ~ N(0, shadowing_std_db^2)",
                max_optimizer_cells: mimo_uplink::optimizer::MAX_CELLS,
            },
            spec: spec.clone(),
        }
    }

    /// Write `<stem>.meta.toml` next to the result file.
    pub fn write_next_to(&self, out_path: &Path) -> Result<(), CliError> {
        let path = out_path.with_extension("meta.toml");
        let text = toml::to_string_pretty(self)
            .map_err(|e| CliError::config(format!("metadata serialization: {e}")))?;
        std::fs::write(&path, text)
            .map_err(|e| CliError::config(format!("cannot write {}: {e}", path.display())))?;
        Ok(())
    }
}
