//! Command-line driver for the impact-subtype pipeline.

pub mod app;
pub mod commands;
pub mod config;
pub mod error;
pub mod meta;

pub use app::{run_app, Cli};
pub use config::{Overrides, RunConfig};
pub use error::CliError;
pub use meta::RunMeta;
