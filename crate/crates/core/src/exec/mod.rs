//! Back-end orchestration: plan a validated pipeline, lower it to a listing,
//! run it against a data directory, and record everything in a run
//! directory with a reproducible manifest.

mod doe;
mod log;
mod manifest;
mod plan;
mod runner;
mod store;

pub use doe::{generate_datasets, generate_doe_dataset, strain_response, DoeError, DoeFiles, DoeSpec};
pub use log::{Level, LogLine, LogObserver};
pub use manifest::{ExportRecord, FitSummary, RunFailure, RunManifest, RunStatus, ScoreSummary};
pub use plan::{
    dataset_artifact, function_artifact, lower, plan, Binding, ExecutionPlan, PlanError, PlanOptions, Step, StepOutput,
};
pub use runner::{run, train_config, RunError, RunOptions};
pub use store::{ArtifactStore, LISTING_FILE, LOG_FILE, MANIFEST_FILE};
