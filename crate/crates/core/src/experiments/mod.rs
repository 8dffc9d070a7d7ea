//! Experiment orchestration: configuration, runs, manifests, comparison and figures.

mod config;
pub mod plots;

pub use config::{DataBlock, DriftBlock, DriftType, ExperimentConfig, ExperimentKind, GridBlock, ModelBlock, Params, TimeBlock};
mod run;

pub use run::{compare, run, Check, CheckDiff, CompareReport, RunManifest, Verdict};
