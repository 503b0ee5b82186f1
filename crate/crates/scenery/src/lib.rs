//! Experiment harness for Brownian motion in random scenery: configuration,
//! deterministic parallel runs, CSV artifacts, test suites and reports.

pub mod config;
pub mod error;
pub mod harness;
pub mod io;
pub mod report;
pub mod suites;

pub use config::{ExperimentConfig, RunPlan, SuiteName};
pub use error::{HarnessError, Result};
pub use harness::{run_experiment, simulate, RunOutcome};
pub use suites::{run_suites, Artifacts};
