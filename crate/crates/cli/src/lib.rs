//! Experiment runner for the `dcts` bandit library: configuration, scenario
//! and replay dispatch, sweeps and CSV metric output.

pub mod config;
pub mod output;
pub mod run;

pub use config::{validate_config, ExperimentConfig, Mode, RawConfig};
