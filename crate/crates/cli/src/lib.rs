//! Experiment harness: configuration, sweeps and the `sgtv` command.

pub mod commands;
pub mod config;
pub mod error;
pub mod sweep;

pub use commands::main_with_args;
pub use error::{CliError, Result};
