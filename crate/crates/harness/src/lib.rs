//! Experiment harness: configuration files, multi-seed runs, aggregation,
//! and the `aloha` command line tool.

pub mod cli;
pub mod config;
mod error;
pub mod experiment;
pub mod metrics;
pub mod output;

pub use config::{load_config, parse_config, ExperimentConfig, Sweep, SweepPoint};
pub use error::{Diagnostic, HarnessError, Result};
pub use experiment::{pretrain, run_point, run_sweep, summarize, trials_for, PointResult, SeedRun};
pub use metrics::{aggregate_trials, paired_t_test, MetricSummary, PairedTest, TrialRecords};
