//! Command-line front end for the neutrosophic clustering pipeline.
//!
//! The binary is a thin clap layer over [`commands`]; everything it does is
//! also callable from here, which is how the integration tests drive it.

pub mod commands;
pub mod config;
pub mod error;

pub use commands::{cmd_cluster, cmd_export_matrices, cmd_metrics, cmd_sweep_lambda, run_pipeline, PipelineRun};
pub use config::{ConfigLayer, Emit, RunConfig};
pub use error::CliError;
