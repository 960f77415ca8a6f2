//! Query files, CSV data and the `osyan` subcommands.

pub mod commands;
pub mod csvio;
pub mod dsl;

pub use commands::{run, Cli, UsageError};
