//! Scenario files, runs and oracle comparisons for `opinion-kinetics`.
//!
//! The binary wraps three commands: `run` writes moment and histogram CSVs,
//! `compare-oracle` checks the simulated means against the moment
//! equations, and `steady` compares a long run with the closed-form
//! stationary densities.

// Negated comparisons are how NaN inputs get rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
mod error;

pub use config::{load_config, parse_config, Scenario, ScenarioConfig};
pub use error::{CliError, Result};

use std::path::PathBuf;

/// Directory of the bundled scenarios.
pub fn scenarios_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

/// Names of the bundled scenarios, sorted.
pub const BUNDLED: [&str; 6] = ["dirac", "steady", "test1a", "test1b", "test2", "test3"];

pub fn bundled(name: &str) -> PathBuf {
    scenarios_dir().join(format!("{name}.toml"))
}
