//! Experiment configuration: JSON in, strictly validated.
//!
//! Unknown fields are rejected everywhere so typos in experiment definitions
//! fail loudly instead of silently running defaults.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use twoq::model::HeavyTrafficFamily;

#[derive(Debug)]
pub enum ConfigError {
    Io(std::io::Error),
    Parse(serde_json::Error),
    Invalid(String),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Io(e) => write!(f, "cannot read config: {e}"),
            ConfigError::Parse(e) => write!(f, "config parse error: {e}"),
            ConfigError::Invalid(msg) => write!(f, "invalid config: {msg}"),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Exact,
    Sim,
    Sde,
    Limits,
    Bar,
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Engine::Exact => "exact",
            Engine::Sim => "sim",
            Engine::Sde => "sde",
            Engine::Limits => "limits",
            Engine::Bar => "bar",
        };
        f.write_str(s)
    }
}

impl FromStr for Engine {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(Engine::Exact),
            "sim" => Ok(Engine::Sim),
            "sde" => Ok(Engine::Sde),
            "limits" => Ok(Engine::Limits),
            "bar" => Ok(Engine::Bar),
            other => Err(format!("unknown engine '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSettings {
    pub events: u64,
    pub warmup: u64,
    pub reps: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SdeSettings {
    pub h: f64,
    pub samples: usize,
    /// Burn-in in time units.
    pub burn_in: f64,
    /// Sample spacing in steps.
    pub thinning: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub family: HeavyTrafficFamily,
    pub r_values: Vec<f64>,
    pub engines: Vec<Engine>,
    #[serde(default)]
    pub sim: Option<SimSettings>,
    #[serde(default)]
    pub sde: Option<SdeSettings>,
    pub out_prefix: String,
    /// Dump per-run event-average histograms as JSON next to the CSV.
    #[serde(default)]
    pub dump_histograms: bool,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(ConfigError::Parse)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(ConfigError::Io)?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.family
            .validate()
            .map_err(|e| ConfigError::Invalid(format!("family: {e}")))?;
        if self.r_values.is_empty() {
            return Err(ConfigError::Invalid("r_values must be nonempty".into()));
        }
        for w in self.r_values.windows(2) {
            if w[1] >= w[0] {
                return Err(ConfigError::Invalid(format!(
                    "r_values must be strictly decreasing, got {} then {}",
                    w[0], w[1]
                )));
            }
        }
        if self.r_values.iter().any(|r| !(*r > 0.0 && *r <= 1.0)) {
            return Err(ConfigError::Invalid("every r must lie in (0, 1]".into()));
        }
        if self.engines.is_empty() {
            return Err(ConfigError::Invalid("engines must be nonempty".into()));
        }
        if self.engines.contains(&Engine::Sim) && self.sim.is_none() {
            return Err(ConfigError::Invalid(
                "engine 'sim' requires the sim settings block".into(),
            ));
        }
        if self.engines.contains(&Engine::Sde) && self.sde.is_none() {
            return Err(ConfigError::Invalid(
                "engine 'sde' requires the sde settings block".into(),
            ));
        }
        if let Some(sim) = &self.sim {
            if sim.events <= sim.warmup {
                return Err(ConfigError::Invalid(
                    "sim.events must exceed sim.warmup".into(),
                ));
            }
            if sim.reps == 0 {
                return Err(ConfigError::Invalid("sim.reps must be >= 1".into()));
            }
        }
        if let Some(sde) = &self.sde {
            if !(sde.h > 0.0) || sde.samples == 0 || sde.thinning == 0 || !(sde.burn_in >= 0.0) {
                return Err(ConfigError::Invalid("bad sde settings".into()));
            }
        }
        if self.out_prefix.is_empty() {
            return Err(ConfigError::Invalid("out_prefix must be nonempty".into()));
        }
        Ok(())
    }
}
