//! Command-line front end: scenario files, table output and exit codes.

pub mod app;
pub mod error;
pub mod output;
pub mod scenario_file;

pub use app::{run, Cli};
pub use error::{CliError, CliResult};
