//! Config-driven pipeline behind the `dsm` binary: simulate data, reconstruct
//! indicator fields, analyze recovered supports and render exports.

pub mod commands;
pub mod config;
mod error;

pub use config::ExperimentConfig;
pub use error::CliError;
