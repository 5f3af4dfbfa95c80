//! The HTTP service driven in-process: store a pipeline, read its live
//! diagnostics, start a run and poll its log until it finishes.
//!
//! ```bash
//! cargo run --release -p fdf --example service_in_process
//! ```

use std::time::Duration;

use axum::body::Body;
use axum::http::{Method, Request};
use axum::Router;
use fdf::exec::{generate_doe_dataset, DoeSpec};
use fdf::service::{router, AppState, ServiceConfig};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

const GOLDEN: &str = include_str!("../fixtures/rom_pipeline.fdf.json");
const MISCONNECTED: &str = include_str!("../fixtures/rom_misconnected.fdf.json");

async fn call(app: &Router, method: Method, uri: &str, body: String) -> Result<Value, Box<dyn std::error::Error>> {
    let req = Request::builder().method(method).uri(uri).body(Body::from(body))?;
    let res = app.clone().oneshot(req).await?;
    let bytes = res.into_body().collect().await?.to_bytes();
    Ok(serde_json::from_slice(&bytes)?)
}

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let work = std::env::temp_dir().join(format!("fdf-service-demo-{}", std::process::id()));
    let data = work.join("data");
    let spec = DoeSpec {
        n_samples: 120,
        displ_dim: 200,
        eps_dim: 240,
        ..DoeSpec::default()
    };
    generate_doe_dataset(&spec, &data)?;

    let app = router(AppState::new(ServiceConfig {
        runs_dir: work.join("runs"),
        ..ServiceConfig::default()
    }));

    let warned = call(&app, Method::PUT, "/pipelines/rom", MISCONNECTED.into()).await?;
    println!("PUT misconnected: {}", warned["diagnostics"][0]["message"]);
    let clean = call(&app, Method::PUT, "/pipelines/rom", GOLDEN.into()).await?;
    println!(
        "PUT golden: {} diagnostic(s)",
        clean["diagnostics"].as_array().map_or(0, Vec::len)
    );

    let body = json!({ "data_dir": data, "seed": spec.seed }).to_string();
    let started = call(&app, Method::POST, "/pipelines/rom/runs", body).await?;
    let run_id = started["run_id"].as_str().unwrap_or_default().to_string();
    println!("started {run_id}");

    let mut cursor = 0;
    loop {
        let log = call(
            &app,
            Method::GET,
            &format!("/runs/{run_id}/log?after={cursor}"),
            String::new(),
        )
        .await?;
        for line in log["lines"].as_array().into_iter().flatten() {
            println!("  {}", line.as_str().unwrap_or_default());
        }
        cursor = log["next"].as_u64().unwrap_or(cursor);
        let run = call(&app, Method::GET, &format!("/runs/{run_id}"), String::new()).await?;
        if matches!(run["status"].as_str(), Some("ok" | "failed")) {
            println!("status: {}", run["status"]);
            break;
        }
        tokio::time::sleep(Duration::from_millis(100)).await;
    }

    let chart = call(
        &app,
        Method::GET,
        &format!("/runs/{run_id}/charts/score"),
        String::new(),
    )
    .await?;
    println!(
        "score chart: {} points, mean r2 {}",
        chart["points"].as_array().map_or(0, Vec::len),
        chart["r2_mean"]
    );
    Ok(())
}
