//! Experiment orchestration for the frog-model toolkit: config files,
//! replica-parallel runs with paired seeds, run records, and the
//! verification suites behind `frog verify`.

pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod records;
pub mod verify;

pub use config::{Experiment, ExperimentConfig, ExperimentName};
pub use error::{HarnessError, Result};
pub use experiments::{run_experiment, Report, Status};
pub use records::RunRecord;
