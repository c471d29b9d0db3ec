//! Experiment configs, set generators, runs and reports.

pub mod config;
pub mod experiment;
pub mod generate;
pub mod report;

pub use config::{ExperimentConfig, GeneratorKind, Stage};
pub use experiment::{run_experiment, run_on_set, sigma_estimate, ExperimentResult};
pub use generate::generate_set;
pub use report::{csv, csv_row, text_report, write_outputs, CSV_HEADER};
