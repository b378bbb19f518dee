//! Config ingestion and the design, curve, simulate and pendulum commands.

pub mod commands;
pub mod config;
pub mod error;
pub mod synth;

pub use config::ProjectConfig;
pub use error::CliError;
