//! Command-line front end for the `vortex-core` retrieval pipeline: config
//! files, observation CSVs, and the CSV/JSON outputs of each subcommand.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;

pub use config::{Overrides, RunConfig};
pub use error::CliError;
