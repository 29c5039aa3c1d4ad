//! Command-line front end: configuration files, trace and feature-file
//! serialization, and the subcommand implementations.

pub mod commands;
pub mod config;
pub mod feature_io;
pub mod trace_io;

pub use commands::{
    cmd_asymptotic, cmd_metrics, cmd_oracle, cmd_run, cmd_verify, EXIT_CHECK_FAILED, EXIT_DIVERGED,
    EXIT_OK, EXIT_USAGE,
};
pub use config::{AsymptoticConfig, ExperimentConfig, ResolvedExperiment};
