//! Configuration, orchestration and output for the `ebqi` command.

pub mod commands;
pub mod config;
pub mod output;

pub use commands::{compute, execute, CliError, Command, RunReport, RunStatus};
pub use config::{ExperimentConfig, Format};
