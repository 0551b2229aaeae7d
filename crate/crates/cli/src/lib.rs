//! Command-line front end: CSV ingestion, the `phdsens` subcommands and their
//! output artifacts.

pub mod cli;
pub mod commands;
pub mod error;
pub mod ingest;
pub mod manifest;
pub mod output;

pub use error::{CliError, CliResult};
