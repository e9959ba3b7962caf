//! Scenario files, runs, comparisons and certificates for the `pmhe`
//! command.

pub mod config;
pub mod error;
pub mod matrix;
pub mod plot;
pub mod runner;

pub use config::{
    ComparatorChoice, EstimatorKind, GainSpec, MeasurementSource, Metric, OutputFormat, ScenarioConfig,
    BUILTIN_REACTOR,
};
pub use error::{CliError, Problem, Result};
pub use runner::{
    certify_scenario, compare_estimators, design, execute, run_scenario, simulate, trace_csv, Outcome,
    RunOptions, RunOutput, Summary, SummaryRow,
};
