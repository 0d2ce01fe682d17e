//! Batch front end for the loss-index pipeline: input files, run
//! configuration, stage wiring and artifact emission.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod files;
pub mod output;
pub mod pipeline;
pub mod validate;

pub use commands::{execute, Command};
pub use config::{Overrides, RunConfig};
pub use error::{CliError, Result};
