//! Configuration, persistence and subcommands behind the `ropeclimb` binary.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod persist;

pub use commands::{CliError, Outcome, PlanFile};
pub use config::{load_scenario, ConfigError, ScenarioFile};
