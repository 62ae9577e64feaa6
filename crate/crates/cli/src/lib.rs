//! Scenario-driven front end for `predictorlab-core`: load a JSON
//! scenario, then simulate, analyze, sweep the reset period, or run the
//! identity checks, writing CSV and `key = value` reports.

pub mod commands;
pub mod output;
pub mod scenario;

pub use commands::CliError;
pub use scenario::{parse_scenario, parse_scenario_str, write_scenario, Scenario, ScenarioError};
