//! Experiment harness: configuration, datasets, metrics and runs.

pub mod config;
pub mod data;
pub mod experiment;
pub mod kmeans;
pub mod metrics;
pub mod suites;

pub use config::{Clock, DatasetSpec, ExperimentConfig, Jl};
pub use data::{gen_ensemble_instance, image_to_weighted_pattern, Dataset, GrayImage};
pub use experiment::{build_dataset, run_experiment, ExperimentOutput, RunRecord};
pub use metrics::{misclustered_percentage, x_over_ave, MetricsRow};
