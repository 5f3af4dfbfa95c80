//! Implicit typing: infer the provenance type of every port, show the warning
//! raised by a misconnected surrogate, then apply the suggested override.
//!
//! ```bash
//! cargo run -p fdf --example implicit_typing
//! ```

use fdf::{infer_types, parse_pipeline, validate, PortType};

const MISCONNECTED: &str = include_str!("../fixtures/rom_misconnected.fdf.json");

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut graph = parse_pipeline(MISCONNECTED)?;

    let typing = infer_types(&graph);
    for (port, ty) in &typing.ports {
        match ty {
            PortType::Data { tag } => println!("{port:<32} data      {tag}"),
            PortType::Function { signature } => println!("{port:<32} function  {signature}"),
        }
    }

    let diags = validate(&graph);
    println!("\n{} diagnostic(s):", diags.len());
    for d in &diags {
        println!("{d}");
    }

    let Some(fix) = diags
        .iter()
        .find_map(|d| d.suggested_override.as_ref()?.anchors.clone())
    else {
        return Ok(());
    };
    println!("\napplying override {fix}");
    graph.overrides.push(fix);
    println!("diagnostics after override: {}", validate(&graph).len());
    Ok(())
}
