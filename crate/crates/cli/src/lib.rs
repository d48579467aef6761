//! Command-line front end for the Stackelberg penalty solver: run experiments,
//! write CSV traces, execute the oracle-backed verification suites and fit
//! empirical rates.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod registry;
pub mod trace;

pub use cli::run_cli;
pub use config::RunConfig;
pub use error::{CliError, EXIT_BUDGET, EXIT_ERROR, EXIT_OK, EXIT_VERIFY};
pub use registry::Registry;
pub use trace::{Trace, TraceMeta, TraceRow};
