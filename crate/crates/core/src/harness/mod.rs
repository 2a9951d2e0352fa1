//! Experiment runner: configuration, replay, regret, sweeps and reports.

pub mod config;
pub mod report;
pub mod run;
pub mod sweep;

pub use config::{LearnerKind, RunConfig, TuningKind};
pub use report::{emit_report, emit_sweep, read_report, VERSION};
pub use run::{prepare, run_experiment, RegretReport, Setup};
pub use sweep::{sweep, SweepCell};
