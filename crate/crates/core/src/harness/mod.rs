//! Config-driven experiment runner and the acceptance checks built on it.

pub mod config;
pub mod run;
pub mod svg;
pub mod verify;

pub use config::{resolve_seed, ExperimentConfig, RawConfig, Scenario};
pub use run::{run_experiment, with_workers, write_outputs, ExperimentOutput, OutputFile, OutputFormat};
