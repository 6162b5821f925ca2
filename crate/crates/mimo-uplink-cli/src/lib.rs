//! Library surface of the command-line front end: spec-file ingestion, the
//! `run` and `optimize` entry points, and CSV/metadata output.

pub mod output;
pub mod spec;

use std::path::Path;
use std::time::Instant;

use mimo_uplink::asymptotic::{
    build_asymptotic_inputs, optimal_zetas, rate_ian_asym, rate_sd_asym, rate_td_asym,
    AsymptoticInputs,
};
use mimo_uplink::finite::{
    rate_ian_finite, rate_linear_finite, rate_sd_finite, rate_td_finite, LinearReceiver, Scheme,
    SchemeRateReport,
};
use mimo_uplink::network::{NetworkConfig, ScenarioSpec, ScenarioVariant};
use mimo_uplink::optimizer::optimize_os;

use crate::output::{MetadataSidecar, OptimizeRow, RunRow};
use crate::spec::{noise_power_from_snr_db, parse_scheme, RunSpec, TdZetas};

/// CLI-level error with a process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Spec parsing/validation problems and I/O failures. Exit code 2.
    Config(String),
    /// Numerical failures (non-convergence, factorization breakdown). Exit 3.
    Numerical(String),
    /// Requests beyond hard capacity limits. Exit code 4.
    Capacity(String),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Capacity(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical error: {m}"),
            CliError::Capacity(m) => write!(f, "capacity error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<mimo_uplink::Error> for CliError {
    fn from(e: mimo_uplink::Error) -> Self {
        match e {
            mimo_uplink::Error::Config(m) => CliError::Config(m),
            mimo_uplink::Error::Numerical(m) => CliError::Numerical(m),
            mimo_uplink::Error::Capacity(m) => CliError::Capacity(m),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Config(format!("i/o: {e}"))
    }
}

// ---------------------------------------------------------------------------
// run
// ---------------------------------------------------------------------------

/// Execute every requested (scheme, backend, sweep point) cell and write one
/// CSV row per cell plus a metadata sidecar next to the output file.
pub fn run_command(
    spec_path: &Path,
    out_path: &Path,
    seed_override: Option<u64>,
) -> Result<(), CliError> {
    let text = std::fs::read_to_string(spec_path)
        .map_err(|e| CliError::config(format!("cannot read {}: {e}", spec_path.display())))?;
    let mut spec = RunSpec::parse(&text)?;
    if let Some(seed) = seed_override {
        spec.seed = seed;
    }
    let rows = execute_run(&spec)?;
    output::write_run_csv(out_path, &rows)?;
    MetadataSidecar::for_spec(&spec).write_next_to(out_path)?;
    Ok(())
}

/// All rows of a `run` invocation, in deterministic order.
pub fn execute_run(spec: &RunSpec) -> Result<Vec<RunRow>, CliError> {
    let schemes: Vec<Scheme> =
        spec.schemes.iter().map(|s| parse_scheme(s)).collect::<Result<_, _>>()?;
    check_backend_support(spec, &schemes)?;
    let (sweep_name, sweep_values) = spec.sweep_points();
    let mut rows = Vec::new();
    for &value in &sweep_values {
        let (config, scenario) = point_config(spec, &sweep_name, value)?;
        let point_label = if sweep_name == "none" { None } else { Some(value) };
        // Asymptotic inputs are shared by IAN/SD/TD at this point.
        let mut asym_inputs: Option<AsymptoticInputs> = None;
        for &scheme in &schemes {
            if spec.backend.includes_finite() && finite_supports(scheme) {
                let started = Instant::now();
                let report = run_finite(spec, &config, &scenario, scheme)?;
                rows.push(RunRow::new(
                    &report,
                    "finite",
                    &sweep_name,
                    point_label,
                    report.trials,
                    0,
                    started.elapsed().as_secs_f64(),
                ));
            }
            if spec.backend.includes_asymptotic() && asymptotic_supports(scheme) {
                let started = Instant::now();
                let report =
                    run_asymptotic(spec, &config, &scenario, scheme, &mut asym_inputs)?;
                rows.push(RunRow::new(
                    &report,
                    "asymptotic",
                    &sweep_name,
                    point_label,
                    0,
                    spec.a_samples,
                    started.elapsed().as_secs_f64(),
                ));
            }
        }
    }
    Ok(rows)
}

fn finite_supports(scheme: Scheme) -> bool {
    !matches!(scheme, Scheme::Os)
}

fn asymptotic_supports(scheme: Scheme) -> bool {
    !matches!(scheme, Scheme::LinearMf | Scheme::LinearMmse)
}

fn check_backend_support(spec: &RunSpec, schemes: &[Scheme]) -> Result<(), CliError> {
    for &scheme in schemes {
        match spec.backend {
            spec::Backend::Finite if !finite_supports(scheme) => {
                return Err(CliError::config(format!(
                    "scheme {scheme} has no finite-antenna evaluator; use the asymptotic backend"
                )));
            }
            spec::Backend::Asymptotic if !asymptotic_supports(scheme) => {
                return Err(CliError::config(format!(
                    "scheme {scheme} is a finite-backend baseline; its asymptotic closed form \
                     is out of scope"
                )));
            }
            _ => {}
        }
    }
    if matches!(&spec.td_zetas, Some(TdZetas::Keyword(w)) if w == "optimal")
        && spec.backend.includes_finite()
        && schemes.contains(&Scheme::Td)
    {
        return Err(CliError::config(
            "td_zetas = \"optimal\" applies only to the asymptotic backend; the optimal split \
             is an asymptotic result",
        ));
    }
    Ok(())
}

fn point_config(
    spec: &RunSpec,
    variable: &str,
    value: f64,
) -> Result<(NetworkConfig, ScenarioSpec), CliError> {
    let mut config = spec.network_config()?;
    let mut scenario = spec.scenario_spec()?;
    match variable {
        "none" => {}
        "snr_db" => config.noise_power = noise_power_from_snr_db(value),
        "pilot_symbols" => {
            config.pilot_symbols = value.round() as usize;
        }
        "antennas" => {
            config.antennas = value.round() as usize;
        }
        "p" => match &mut scenario.variant {
            ScenarioVariant::Geometric { p, .. } => *p = value,
            _ => return Err(CliError::config("sweeping p requires the geometric scenario")),
        },
        other => return Err(CliError::config(format!("unknown sweep variable {other:?}"))),
    }
    config
        .validate()
        .map_err(|e| CliError::config(format!("sweep point {variable}={value}: {e}")))?;
    scenario
        .validate(config.cells)
        .map_err(|e| CliError::config(format!("sweep point {variable}={value}: {e}")))?;
    Ok((config, scenario))
}

fn td_zetas_finite(spec: &RunSpec, cells: usize) -> Result<Vec<f64>, CliError> {
    match &spec.td_zetas {
        None => Ok(vec![1.0 / cells as f64; cells]),
        Some(TdZetas::Keyword(w)) if w == "equal" => Ok(vec![1.0 / cells as f64; cells]),
        Some(TdZetas::Keyword(w)) => Err(CliError::config(format!(
            "td_zetas keyword {w:?} is not valid for the finite backend"
        ))),
        Some(TdZetas::Explicit(z)) => Ok(z.clone()),
    }
}

fn run_finite(
    spec: &RunSpec,
    config: &NetworkConfig,
    scenario: &ScenarioSpec,
    scheme: Scheme,
) -> Result<SchemeRateReport, CliError> {
    let report = match scheme {
        Scheme::Ian => rate_ian_finite(config, scenario, spec.trials, spec.seed)?,
        Scheme::Sd => rate_sd_finite(config, scenario, spec.trials, spec.seed)?,
        Scheme::Td => {
            let zetas = td_zetas_finite(spec, config.cells)?;
            rate_td_finite(config, scenario, &zetas, spec.trials, spec.seed)?
        }
        Scheme::LinearMf => rate_linear_finite(
            config,
            scenario,
            LinearReceiver::MatchedFilter,
            spec.trials,
            spec.seed,
        )?,
        Scheme::LinearMmse => {
            rate_linear_finite(config, scenario, LinearReceiver::Mmse, spec.trials, spec.seed)?
        }
        Scheme::Os => unreachable!("filtered by finite_supports"),
    };
    Ok(report)
}

fn run_asymptotic(
    spec: &RunSpec,
    config: &NetworkConfig,
    scenario: &ScenarioSpec,
    scheme: Scheme,
    cache: &mut Option<AsymptoticInputs>,
) -> Result<SchemeRateReport, CliError> {
    if scheme == Scheme::Os {
        let outcome = optimize_os(config, scenario, spec.a_samples, spec.seed)?;
        return Ok(outcome.best_report);
    }
    if cache.is_none() {
        *cache = Some(build_asymptotic_inputs(config, scenario, spec.a_samples, spec.seed)?);
    }
    let inputs = cache.as_ref().unwrap();
    let report = match scheme {
        Scheme::Ian => rate_ian_asym(inputs)?,
        Scheme::Sd => rate_sd_asym(inputs)?,
        Scheme::Td => match &spec.td_zetas {
            None => {
                let z = vec![1.0 / config.cells as f64; config.cells];
                rate_td_asym(inputs, &z)?
            }
            Some(TdZetas::Keyword(w)) if w == "equal" => {
                let z = vec![1.0 / config.cells as f64; config.cells];
                rate_td_asym(inputs, &z)?
            }
            Some(TdZetas::Keyword(_)) => optimal_zetas(inputs)?.1,
            Some(TdZetas::Explicit(z)) => rate_td_asym(inputs, z)?,
        },
        _ => unreachable!("filtered by asymptotic_supports"),
    };
    Ok(report)
}

// ---------------------------------------------------------------------------
// optimize
// ---------------------------------------------------------------------------

/// Run the exhaustive configuration search and write the ranked table.
pub fn optimize_command(
    spec_path: &Path,
    out_path: &Path,
    seed_override: Option<u64>,
) -> Result<(), CliError> {
    let text = std::fs::read_to_string(spec_path)
        .map_err(|e| CliError::config(format!("cannot read {}: {e}", spec_path.display())))?;
    let mut spec = RunSpec::parse(&text)?;
    if let Some(seed) = seed_override {
        spec.seed = seed;
    }
    let rows = execute_optimize(&spec)?;
    output::write_optimize_csv(out_path, &rows)?;
    MetadataSidecar::for_spec(&spec).write_next_to(out_path)?;
    Ok(())
}

/// Ranked-table rows of an `optimize` invocation.
pub fn execute_optimize(spec: &RunSpec) -> Result<Vec<OptimizeRow>, CliError> {
    if spec.sweep.is_some() {
        return Err(CliError::config("optimize evaluates a single point; remove [sweep]"));
    }
    let config = spec.network_config()?;
    let scenario = spec.scenario_spec()?;
    let started = Instant::now();
    let outcome = optimize_os(&config, &scenario, spec.a_samples, spec.seed)?;
    let elapsed = started.elapsed().as_secs_f64();
    Ok(outcome
        .table
        .iter()
        .map(|row| OptimizeRow::new(row, spec.a_samples, spec.seed, elapsed))
        .collect())
}
