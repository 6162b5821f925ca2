//! Run-specification file: a TOML document describing the network, the
//! scenario, the schemes to evaluate, and an optional one-dimensional sweep.

use serde::{Deserialize, Serialize};

use mimo_uplink::finite::Scheme;
use mimo_uplink::network::{
    NetworkConfig, ScenarioSpec, ScenarioVariant, DEFAULT_MIN_DISTANCE_M,
    DEFAULT_SHADOWING_STD_DB,
};

use crate::CliError;

pub const DEFAULT_TRIALS: usize = 2000;
pub const DEFAULT_A_SAMPLES: usize = 200_000;

/// Top-level parsed spec file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub seed: u64,
    /// Monte Carlo trials for the finite backend.
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// A-variable samples for the asymptotic backend.
    #[serde(default = "default_a_samples")]
    pub a_samples: usize,
    #[serde(default)]
    pub backend: Backend,
    pub schemes: Vec<String>,
    /// Time-division interval split: "equal", "optimal" (asymptotic backend
    /// only), or an explicit list summing to 1. Defaults to equal splits.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub td_zetas: Option<TdZetas>,
    pub network: NetworkSection,
    pub scenario: ScenarioSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
}

fn default_trials() -> usize {
    DEFAULT_TRIALS
}

fn default_a_samples() -> usize {
    DEFAULT_A_SAMPLES
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    Finite,
    Asymptotic,
    #[default]
    Both,
}

impl Backend {
    pub fn includes_finite(self) -> bool {
        matches!(self, Backend::Finite | Backend::Both)
    }

    pub fn includes_asymptotic(self) -> bool {
        matches!(self, Backend::Asymptotic | Backend::Both)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TdZetas {
    Keyword(String),
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSection {
    pub cells: usize,
    pub users_per_cell: usize,
    pub antennas: usize,
    pub coherence_symbols: usize,
    pub pilot_symbols: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_power: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr_db: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub variant: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shadowing_std_db: Option<f64>,
    // synthetic
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    // geometric
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub circle_radius_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub area_side_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_distance_m: Option<f64>,
    // two_cell_bounded
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_max: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub variable: SweepVariable,
    pub from: f64,
    pub to: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    SnrDb,
    PilotSymbols,
    Antennas,
    P,
}

impl SweepVariable {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepVariable::SnrDb => "snr_db",
            SweepVariable::PilotSymbols => "pilot_symbols",
            SweepVariable::Antennas => "antennas",
            SweepVariable::P => "p",
        }
    }
}

/// SNR convention: SNR = 1 / sigma_W^2 with unit transmit power.
pub fn noise_power_from_snr_db(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

impl RunSpec {
    pub fn parse(text: &str) -> Result<RunSpec, CliError> {
        let spec: RunSpec =
            toml::from_str(text).map_err(|e| CliError::config(format!("spec file: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.schemes.is_empty() {
            return Err(CliError::config("schemes must list at least one scheme"));
        }
        for s in &self.schemes {
            parse_scheme(s)?;
        }
        match (self.network.noise_power, self.network.snr_db) {
            (Some(_), Some(_)) => {
                return Err(CliError::config(
                    "network: give exactly one of noise_power and snr_db, not both",
                ))
            }
            (None, None) => {
                return Err(CliError::config("network: one of noise_power or snr_db is required"))
            }
            _ => {}
        }
        if let Some(sweep) = &self.sweep {
            if sweep.steps == 0 {
                return Err(CliError::config("sweep.steps must be at least 1"));
            }
            if sweep.steps > 1 && !(sweep.to > sweep.from) {
                return Err(CliError::config("sweep range must be increasing (from < to)"));
            }
            if sweep.variable == SweepVariable::P && self.scenario.variant != "geometric" {
                return Err(CliError::config("sweeping p requires the geometric scenario"));
            }
        }
        if let Some(TdZetas::Keyword(word)) = &self.td_zetas {
            if word != "equal" && word != "optimal" {
                return Err(CliError::config(format!(
                    "td_zetas keyword must be \"equal\" or \"optimal\", got {word:?}"
                )));
            }
        }
        self.network_config()?;
        self.scenario_spec()?;
        Ok(())
    }

    pub fn network_config(&self) -> Result<NetworkConfig, CliError> {
        let noise = match (self.network.noise_power, self.network.snr_db) {
            (Some(p), None) => p,
            (None, Some(s)) => noise_power_from_snr_db(s),
            _ => unreachable!("validated"),
        };
        NetworkConfig::new(
            self.network.cells,
            self.network.users_per_cell,
            self.network.antennas,
            self.network.coherence_symbols,
            self.network.pilot_symbols,
            noise,
        )
        .map_err(CliError::from)
    }

    pub fn scenario_spec(&self) -> Result<ScenarioSpec, CliError> {
        let sc = &self.scenario;
        let require = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| {
                CliError::config(format!("scenario: {name} is required for variant {:?}", sc.variant))
            })
        };
        let variant = match sc.variant.as_str() {
            "synthetic" => ScenarioVariant::Synthetic { alpha: require(sc.alpha, "alpha")? },
            "geometric" => ScenarioVariant::Geometric {
                p: require(sc.p, "p")?,
                circle_radius_m: require(sc.circle_radius_m, "circle_radius_m")?,
                area_side_m: require(sc.area_side_m, "area_side_m")?,
                min_distance_m: sc.min_distance_m.unwrap_or(DEFAULT_MIN_DISTANCE_M),
            },
            "two_cell_bounded" => ScenarioVariant::TwoCellBounded {
                x_min: require(sc.x_min, "x_min")?,
                x_max: require(sc.x_max, "x_max")?,
                y_min: require(sc.y_min, "y_min")?,
                y_max: require(sc.y_max, "y_max")?,
            },
            other => {
                return Err(CliError::config(format!(
                    "scenario: unknown variant {other:?} (expected synthetic, geometric, or \
                     two_cell_bounded)"
                )))
            }
        };
        let shadowing = sc.shadowing_std_db.unwrap_or(match variant {
            ScenarioVariant::TwoCellBounded { .. } => 0.0,
            _ => DEFAULT_SHADOWING_STD_DB,
        });
        let spec = ScenarioSpec { variant, shadowing_std_db: shadowing };
        spec.validate(self.network.cells).map_err(CliError::from)?;
        Ok(spec)
    }

    /// The sweep grid: `(variable name, values)`. A run without a sweep is a
    /// single point labelled "none".
    pub fn sweep_points(&self) -> (String, Vec<f64>) {
        match &self.sweep {
            None => ("none".to_string(), vec![f64::NAN]),
            Some(s) => {
                let values = if s.steps == 1 {
                    vec![s.from]
                } else {
                    (0..s.steps)
                        .map(|i| {
                            s.from + (s.to - s.from) * i as f64 / (s.steps - 1) as f64
                        })
                        .collect()
                };
                (s.variable.as_str().to_string(), values)
            }
        }
    }
}

pub fn parse_scheme(name: &str) -> Result<Scheme, CliError> {
    match name {
        "ian" => Ok(Scheme::Ian),
        "sd" => Ok(Scheme::Sd),
        "td" => Ok(Scheme::Td),
        "os" => Ok(Scheme::Os),
        "linear_mf" => Ok(Scheme::LinearMf),
        "linear_mmse" => Ok(Scheme::LinearMmse),
        other => Err(CliError::config(format!(
            "unknown scheme {other:?} (expected ian, sd, td, os, linear_mf, linear_mmse)"
        ))),
    }
}
