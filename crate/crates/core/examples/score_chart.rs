//! Charts: build the actual-vs-predicted document for a score report and
//! render it as SVG.
//!
//! ```bash
//! cargo run -p fdf --example score_chart [out.svg]
//! ```

use fdf::chart::{chart_document, render_svg};
use fdf::numerics::rng::SeededRng;
use fdf::numerics::{score, Matrix};
use fdf::Dataset;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| std::env::temp_dir().join("fdf-score-chart.svg").display().to_string());

    let mut rng = SeededRng::new(5);
    let actual = Matrix::from_fn(60, 2, |_, _| rng.normal());
    let predicted = Matrix::from_fn(60, 2, |i, j| actual.row(i)[j] + 0.15 * rng.normal());
    let report = score(
        &Dataset::with_default_labels("actual", actual)?,
        &Dataset::with_default_labels("predicted", predicted)?,
    )?;

    let doc = chart_document("score", &report);
    println!(
        "{}: {} points over {} outputs, mean r2 {:.4}",
        doc.title,
        doc.points.len(),
        doc.n_outputs,
        doc.r2_mean
    );
    std::fs::write(&out, render_svg(&doc))?;
    println!("wrote {out}");
    Ok(())
}
