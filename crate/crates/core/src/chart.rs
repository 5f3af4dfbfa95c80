//! Actual-vs-predicted chart data for score boxes, and a flat SVG rendering
//! of it. Points close to the 45° reference line mean accurate predictions.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::{RunManifest, MANIFEST_FILE};
use crate::numerics::{ScorePair, ScoreReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartDocument {
    pub box_id: String,
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    #[serde(with = "crate::numerics::score_serde::flagged")]
    pub r2_mean: f64,
    #[serde(with = "crate::numerics::score_serde::flagged_vec")]
    pub r2: Vec<f64>,
    pub n_samples: usize,
    pub n_outputs: usize,
    /// One entry per sample.
    pub points: Vec<ScorePair>,
    /// Endpoints of the `predicted = actual` line spanning all values.
    pub reference_line: [[f64; 2]; 2],
}

#[derive(Debug, Error)]
pub enum ChartError {
    #[error("no finished run at {0} (manifest missing or unreadable)")]
    NoRun(String),
    #[error("run has no box `{0}`")]
    UnknownBox(String),
    #[error("box `{0}` has no score report")]
    NoReport(String),
    #[error("cannot read score report: {0}")]
    BadReport(String),
}

pub fn chart_document(box_id: &str, report: &ScoreReport) -> ChartDocument {
    let (lo, hi) = report
        .pairs
        .iter()
        .flat_map(|p| p.actual.iter().chain(&p.predicted))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let (lo, hi) = if lo.is_finite() { (lo, hi) } else { (0.0, 1.0) };
    ChartDocument {
        box_id: box_id.to_string(),
        title: format!("{box_id}: actual vs predicted"),
        x_label: "actual".into(),
        y_label: "predicted".into(),
        r2_mean: report.r2_mean,
        r2: report.r2.clone(),
        n_samples: report.n_samples,
        n_outputs: report.r2.len(),
        points: report.pairs.clone(),
        reference_line: [[lo, lo], [hi, hi]],
    }
}

/// Reads the score report of `box_id` from a finished run directory.
pub fn load_chart(run_dir: &Path, box_id: &str) -> Result<ChartDocument, ChartError> {
    let manifest_path = run_dir.join(MANIFEST_FILE);
    let manifest: RunManifest = fs::read(&manifest_path)
        .ok()
        .and_then(|b| serde_json::from_slice(&b).ok())
        .ok_or_else(|| ChartError::NoRun(run_dir.display().to_string()))?;
    let Some(summary) = manifest.scores.get(box_id) else {
        let known = manifest
            .plan
            .iter()
            .any(|line| line.split(" = ").next() == Some(box_id));
        return Err(if known {
            ChartError::NoReport(box_id.to_string())
        } else {
            ChartError::UnknownBox(box_id.to_string())
        });
    };
    let bytes = fs::read(run_dir.join(&summary.report)).map_err(|e| ChartError::BadReport(e.to_string()))?;
    let report: ScoreReport = serde_json::from_slice(&bytes).map_err(|e| ChartError::BadReport(e.to_string()))?;
    Ok(chart_document(box_id, &report))
}

const SIZE: f64 = 480.0;
const MARGIN: f64 = 48.0;

/// Scatter of every (actual, predicted) component with the reference line.
pub fn render_svg(doc: &ChartDocument) -> String {
    let [[lo, _], [hi, _]] = doc.reference_line;
    let span = if hi > lo { hi - lo } else { 1.0 };
    let plot = SIZE - 2.0 * MARGIN;
    let x = |v: f64| MARGIN + (v - lo) / span * plot;
    let y = |v: f64| SIZE - MARGIN - (v - lo) / span * plot;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{plot}" height="{plot}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        svg,
        r##"<line class="reference" x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}" stroke="#888" stroke-dasharray="6 4"/>"##,
        x(lo),
        y(lo),
        x(hi),
        y(hi)
    );
    for p in &doc.points {
        for (a, q) in p.actual.iter().zip(&p.predicted) {
            let _ = writeln!(
                svg,
                r##"<circle cx="{:.3}" cy="{:.3}" r="2" fill="#1f77b4" fill-opacity="0.6"/>"##,
                x(*a),
                y(*q)
            );
        }
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="14">{}</text>"#,
        SIZE / 2.0,
        MARGIN / 2.0,
        xml_escape(&format!("{} (mean R² = {:.4})", doc.title, doc.r2_mean))
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">{}</text>"#,
        SIZE / 2.0,
        SIZE - MARGIN / 3.0,
        xml_escape(&doc.x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="12" transform="rotate(-90 {} {})">{}</text>"#,
        MARGIN / 3.0,
        SIZE / 2.0,
        MARGIN / 3.0,
        SIZE / 2.0,
        xml_escape(&doc.y_label)
    );
    svg.push_str("</svg>\n");
    svg
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
