//! Planning: order the golden pipeline into steps, print the lowered
//! listing, and show how warnings gate planning.
//!
//! ```bash
//! cargo run -p fdf --example plan_and_lower
//! ```

use fdf::exec::PlanError;
use fdf::{lower, parse_pipeline, plan, PlanOptions};

const GOLDEN: &str = include_str!("../fixtures/rom_pipeline.fdf.json");
const MISCONNECTED: &str = include_str!("../fixtures/rom_misconnected.fdf.json");

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let golden = parse_pipeline(GOLDEN)?;
    let p = plan(&golden, PlanOptions::default())?;
    println!("{} steps", p.steps.len());
    print!("{}", lower(&golden, PlanOptions::default())?);

    let misconnected = parse_pipeline(MISCONNECTED)?;
    match plan(&misconnected, PlanOptions::default()) {
        Err(e @ PlanError::Blocked { .. }) => println!("\nmisconnected pipeline: {e}"),
        other => println!("\nmisconnected pipeline: unexpected {other:?}"),
    }
    let forced = plan(
        &misconnected,
        PlanOptions {
            seed: 0,
            allow_warnings: true,
        },
    )?;
    println!(
        "with allow_warnings: {} steps, {} diagnostic(s) carried into the run",
        forced.steps.len(),
        forced.diagnostics.len()
    );
    Ok(())
}
