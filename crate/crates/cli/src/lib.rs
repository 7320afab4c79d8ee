//! Library surface of the experiment runner: configuration parsing and
//! dispatch, kept separate from the binary so integration tests can
//! drive them directly.

pub mod config;
pub mod runner;

pub use config::{build_config, parse_config, ConfigError, ExperimentConfig, ExperimentId};
pub use runner::{run_experiment, RunError, RunOutput, OUT_DIR_ENV};
