//! Experiment harness for the two-level queue toolkit: JSON configuration,
//! an `r`-sweep across the exact solver / simulator / diffusion / limit
//! formulas, distance metrics, and deterministic CSV reporting.

pub mod config;
pub mod engine;
pub mod metrics;

pub use config::{ConfigError, Engine, ExperimentConfig, SdeSettings, SimSettings};
pub use engine::{run_experiment, ComparisonRow, ExperimentReport, CSV_HEADER};
