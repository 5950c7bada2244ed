//! Experiment harness for the `feller-core` engine: TOML configs in, CSV and
//! JSON results out.

pub mod config;
pub mod error;
pub mod run;

pub use config::ExperimentConfig;
pub use error::{CliError, Result};
