//! End-to-end reduced-order model: generate synthetic DoE data, run the
//! standardization + PCA + MLP surrogate pipeline, and print what it
//! learned.
//!
//! ```bash
//! cargo run --release -p fdf --example golden_rom [work_dir]
//! ```

use std::path::PathBuf;
use std::time::Instant;

use fdf::exec::{generate_doe_dataset, plan, run, DoeSpec, PlanOptions, RunOptions};
use fdf::parse_pipeline;

const PIPELINE: &str = include_str!("../fixtures/rom_pipeline.fdf.json");

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let work = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join(format!("fdf-golden-rom-{}", std::process::id())));
    let started = Instant::now();

    let spec = DoeSpec::default();
    let data_dir = work.join("data");
    generate_doe_dataset(&spec, &data_dir)?;
    println!(
        "generated {} samples: displ {}-d, eps {}-d, intrinsic {}-d",
        spec.n_samples, spec.displ_dim, spec.eps_dim, spec.intrinsic_dim
    );

    let graph = parse_pipeline(PIPELINE)?;
    let plan = plan(
        &graph,
        PlanOptions {
            seed: spec.seed,
            allow_warnings: false,
        },
    )?;
    print!("{}", plan.listing());

    let manifest = run(&plan, &data_dir, &work.join("run"), &RunOptions::default())?;
    println!("status: {}", manifest.status);
    for (box_id, fit) in &manifest.fits {
        if let Some(total) = fit.explained_variance_total {
            println!("{box_id}: explained variance {total:.9}");
        }
        if let (Some(a), Some(b)) = (fit.initial_loss, fit.final_loss) {
            println!("{box_id}: loss {a:.4e} -> {b:.4e}");
        }
    }
    for (box_id, s) in &manifest.scores {
        println!("{box_id}: mean r2 {:.6}", s.r2_mean);
    }
    for (name, e) in &manifest.exports {
        println!("export {name}: {}", e.artifact);
    }
    println!("run directory: {}", work.join("run").display());
    println!("elapsed: {:.2?}", started.elapsed());
    Ok(())
}
