//! Experiment configuration, the run driver, verification suites and plot data.

pub mod config;
pub mod experiments;
pub mod plot;
pub mod verify;

pub use config::{Envelope, ExperimentConfig, ExperimentKind, ProfileSpec, SlopeCheck, DEFAULT_SEED};
pub use experiments::{read_summary, run, Assertion, RunOptions, RunSummary, SUMMARY_SCHEMA};
pub use plot::emit_plots;
pub use verify::{run_verification, CheckResult, VerifyReport};
