//! Configuration, output formatting and commands behind the `omfc` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use config::{Resolved, RunConfig};
pub use error::{CliError, CliResult};
