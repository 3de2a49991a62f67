//! Experiment files, scenario comparison reports and the command-line tool.

pub mod cli;
pub mod config;
pub mod report;

pub use config::{apply_overrides, ExperimentConfig, PathsConfig, ReportConfig, TrainingConfig};
pub use report::{
    compare_scenarios, emit_report, parse_csv, percent_reduction, render_csv, render_table,
    ComparisonReport, Metric, MetricComparison, ReportFormat,
};
