//! Experiment orchestration: detection errors, attack statistics and the
//! end-to-end train / attack / retrain pipeline.

mod config;
mod experiment;
mod metrics;

pub use config::ExperimentConfig;
pub use experiment::{run_experiment, run_experiment_file, AttackRecord, ExperimentRun, ExperimentSummary, ImageRecord};
pub use metrics::{
    compute_pe, evaluate_classifier, gamma_cdf, gamma_grid, sign_test_p, AttackReport, DetectionReport,
};
