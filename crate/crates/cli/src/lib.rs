//! Command-line front end: config parsing, the analyze pipeline, and
//! artifact writing.

pub mod analysis;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use commands::{run, Cli};
pub use error::{CliError, CliResult};
