use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::diagnostics::Diagnostic;
use crate::graph::Flavor;
use crate::numerics::ScoreReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    Failed,
}

impl fmt::Display for RunStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RunStatus::Ok => "ok",
            RunStatus::Failed => "failed",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunFailure {
    pub box_id: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportRecord {
    pub box_id: String,
    pub flavor: Flavor,
    pub artifact: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreSummary {
    #[serde(with = "crate::numerics::score_serde::flagged")]
    pub r2_mean: f64,
    #[serde(with = "crate::numerics::score_serde::flagged_vec")]
    pub r2: Vec<f64>,
    pub rmse: Vec<f64>,
    pub n_samples: usize,
    pub report: String,
}

impl ScoreSummary {
    pub fn from_report(report: &ScoreReport, path: String) -> Self {
        Self {
            r2_mean: report.r2_mean,
            r2: report.r2.clone(),
            rmse: report.rmse.clone(),
            n_samples: report.n_samples,
            report: path,
        }
    }
}

/// What a coder or trainer learned, in brief.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explained_variance_ratio: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explained_variance_total: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epochs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_loss: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_loss: Option<f64>,
}

/// Execution record written as `manifest.json` at the end of every run.
///
/// Everything except `timings_ms` is a pure function of the pipeline text,
/// the input bytes, the seed and the engine version.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub engine_version: String,
    pub run_id: String,
    pub pipeline_name: String,
    pub pipeline_hash: String,
    pub seed: u64,
    pub status: RunStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<RunFailure>,
    /// Lowered plan, one line per step.
    pub plan: Vec<String>,
    /// Input files by data source box, with their SHA-256.
    pub inputs: BTreeMap<String, String>,
    /// Every artifact written, relative path to SHA-256.
    pub artifacts: BTreeMap<String, String>,
    pub exports: BTreeMap<String, ExportRecord>,
    pub scores: BTreeMap<String, ScoreSummary>,
    pub fits: BTreeMap<String, FitSummary>,
    pub diagnostics: Vec<Diagnostic>,
    pub timings_ms: BTreeMap<String, f64>,
}

impl RunManifest {
    pub fn is_ok(&self) -> bool {
        self.status == RunStatus::Ok
    }

    /// The manifest with wall-clock timings cleared; equal across reruns of
    /// the same inputs.
    pub fn without_timings(&self) -> Self {
        let mut m = self.clone();
        m.timings_ms.clear();
        m
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}
