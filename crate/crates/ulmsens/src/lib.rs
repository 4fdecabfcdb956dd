//! Command-line front end of `ulmsens-core`: JSON configuration, file
//! formats, a rayon thread pool and the `ulmsens` subcommands.

pub mod cli;
pub mod config;
pub mod error;
pub mod formats;
pub mod parallel;
pub mod summary;

pub use config::RunConfig;
pub use error::{CliError, CliResult};
