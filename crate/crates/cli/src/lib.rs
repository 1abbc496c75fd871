//! Config-driven runner for the linchaos detectors, criteria and
//! constructors. Reports are deterministic JSON; orbit traces are CSV.

pub mod config;
pub mod error;
pub mod output;
pub mod run;

pub use config::ExperimentConfig;
pub use error::{CliError, Result};
pub use run::{run, Outcome, RunContext};
