//! Synthetic logistic-response environments and the two canned scenarios:
//! a new ad domain opening mid-run, and an abrupt preference drift.

mod env;
mod scenario;

pub use env::{make_logistic_env, sigmoid, EnvConfig, LogisticEnv};
pub use scenario::{
    recovery_step, replication_rng, run_drift_scenario, run_in_env, run_scenario,
    run_transfer_scenario, PolicyFactory, ScenarioConfig, ScenarioKind, StepRecord, Trace,
};
