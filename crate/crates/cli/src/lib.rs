//! Experiment harness for the `mobo` command: seeded runs from a JSON
//! config, run artifacts, and multi-seed aggregation.

pub mod catalog;
pub mod compare;
pub mod config;
pub mod run;

pub use compare::{compare, read_summary, SummaryRow};
pub use config::{BenchmarkSpec, BuiltBenchmark, ExperimentConfig};
pub use run::{run_experiment, ParetoDoc, ParetoPoint, RunOptions, RunOutcome, OUTPUT_ROOT_VAR};

pub use mobo_core;
