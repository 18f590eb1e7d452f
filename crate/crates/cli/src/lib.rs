//! Experiment plumbing behind the `agp` binary: TOML configs, the run,
//! sweep, analyze and validate commands, and the on-disk artifact formats.

pub mod artifacts;
pub mod commands;
pub mod config;
pub mod error;
pub mod experiment;
pub mod report;

pub use config::ExperimentConfig;
pub use error::{CliError, CliResult};
