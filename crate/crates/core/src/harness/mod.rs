//! Batch experiments: seeded trials, metric evaluation and report output.

pub mod baseline;
pub mod config;
pub mod experiment;
pub mod output;

pub use baseline::{run_baseline, BaselineOutcome, PopulationFit, BASELINE_METHOD};
pub use config::{ExperimentConfig, MetricKind};
pub use experiment::{aggregate, run_experiment, Aggregate, ExperimentReport, TrialRow};
