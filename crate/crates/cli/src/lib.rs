//! Scenario front end for `mac-consensus`: TOML configs, presets, and the
//! trace/summary writers behind the `mac-consensus` binary.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod presets;
pub mod runner;

pub use config::{parse_config, parse_config_with_seed, ConfigError, ScenarioConfig};
pub use runner::{run_montecarlo, run_scenario, MonteCarloOutcome, RunError, ScenarioOutcome};
