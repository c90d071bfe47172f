//! Command-line experiments over `heatcalc-core`.
//!
//! `parse_config` merges flags with an optional flat `key = value` file
//! (flags win), and `run` executes one command, writing a CSV and a JSON
//! summary. Exit codes: 0 success, 2 configuration error, 1 numerical failure.

pub mod config;
pub mod error;
pub mod run;

pub use config::{parse_config, Command, ExperimentConfig, Grids};
pub use error::{CliError, CliResult};
pub use run::{execute, run, Outcome, Written};
