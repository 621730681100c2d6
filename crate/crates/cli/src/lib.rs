//! Command-line front end: config loading, run orchestration and artifacts.

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;
pub mod output;

pub use config::ExperimentConfig;
pub use error::CliError;
