//! Experiment orchestration: configuration, initial data, runs, reports
//! and output files. Works in `f64`.

pub mod config;
pub mod experiment;
pub mod output;
pub mod presets;
pub mod selftest;

pub use config::{load_config, parse_config, Preset, RunConfig};
pub use experiment::{
    calibrate_records, recalibrate, run_experiment, run_experiment_detailed, RunReport, RunSummary, SnapshotVerdict,
    Termination, Verdict, DISCLAIMER,
};
pub use output::{emit_outputs, execute, load_report, read_spectrum_csv, TIMESERIES_HEADER};
pub use presets::build_initial;
pub use selftest::{self_test, SelfTestOutcome};
