//! Local HTTP service: pipeline storage with live type checking, background
//! runs, incremental logs and chart data. Unauthenticated; bind it to
//! localhost only. Endpoint schemas are in `docs/service-api.md`.

use std::collections::{BTreeMap, VecDeque};
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::sync::Semaphore;

use crate::chart::{load_chart, ChartError};
use crate::diagnostics::Diagnostic;
use crate::exec::{self, LogLine, LogObserver, PlanError, PlanOptions, RunManifest, RunOptions, RunStatus};
use crate::graph::{parse_document, validate, PipelineGraph};
use crate::library;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    /// Each run writes into `<runs_dir>/<run id>`.
    pub runs_dir: PathBuf,
    pub max_concurrent_runs: usize,
    /// Log lines retained in memory per run; older lines are dropped.
    pub log_capacity: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            runs_dir: PathBuf::from("fdf-runs"),
            max_concurrent_runs: 2,
            log_capacity: 10_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ServiceRunStatus {
    Queued,
    Running,
    Ok,
    Failed,
}

impl ServiceRunStatus {
    fn rank(self) -> u8 {
        match self {
            Self::Queued => 0,
            Self::Running => 1,
            Self::Ok | Self::Failed => 2,
        }
    }
}

struct StoredPipeline {
    graph: PipelineGraph,
}

#[derive(Debug)]
struct LogBuffer {
    lines: VecDeque<String>,
    /// Cursor value of `lines[0]`.
    first: usize,
    capacity: usize,
}

impl LogBuffer {
    fn new(capacity: usize) -> Self {
        Self {
            lines: VecDeque::new(),
            first: 0,
            capacity: capacity.max(1),
        }
    }

    fn push(&mut self, line: String) {
        if self.lines.len() == self.capacity {
            self.lines.pop_front();
            self.first += 1;
        }
        self.lines.push_back(line);
    }

    fn end(&self) -> usize {
        self.first + self.lines.len()
    }

    /// Lines with cursor `>= after`, and how many of those were evicted.
    fn since(&self, after: usize) -> (Vec<String>, usize) {
        let dropped = self.first.saturating_sub(after);
        let start = after.max(self.first) - self.first;
        (self.lines.iter().skip(start).cloned().collect(), dropped)
    }
}

struct RunEntry {
    pipeline_id: String,
    status: ServiceRunStatus,
    run_dir: PathBuf,
    manifest: Option<RunManifest>,
    error: Option<String>,
    log: LogBuffer,
}

struct Inner {
    config: ServiceConfig,
    pipelines: Mutex<BTreeMap<String, StoredPipeline>>,
    runs: Mutex<BTreeMap<String, RunEntry>>,
    permits: Arc<Semaphore>,
    counter: AtomicU64,
}

#[derive(Clone)]
pub struct AppState(Arc<Inner>);

impl AppState {
    pub fn new(config: ServiceConfig) -> Self {
        let permits = Arc::new(Semaphore::new(config.max_concurrent_runs.max(1)));
        Self(Arc::new(Inner {
            config,
            pipelines: Mutex::new(BTreeMap::new()),
            runs: Mutex::new(BTreeMap::new()),
            permits,
            counter: AtomicU64::new(0),
        }))
    }

    fn with_run<T>(&self, run_id: &str, f: impl FnOnce(&mut RunEntry) -> T) -> Option<T> {
        self.0.runs.lock().unwrap().get_mut(run_id).map(f)
    }

    fn advance(&self, run_id: &str, status: ServiceRunStatus) {
        self.with_run(run_id, |e| {
            assert!(
                status.rank() > e.status.rank(),
                "run {run_id}: status cannot go from {:?} to {status:?}",
                e.status
            );
            e.status = status;
        });
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/library", get(get_library))
        .route("/pipelines/{id}", put(put_pipeline).get(get_pipeline))
        .route("/pipelines/{id}/runs", post(post_run))
        .route("/runs/{id}", get(get_run))
        .route("/runs/{id}/log", get(get_log))
        .route("/runs/{id}/charts/{box_id}", get(get_chart))
        .with_state(state)
}

/// Serves until Ctrl-C.
pub async fn serve(addr: SocketAddr, config: ServiceConfig) -> std::io::Result<()> {
    std::fs::create_dir_all(&config.runs_dir)?;
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("fdf service listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(AppState::new(config)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

fn error(status: StatusCode, message: impl Into<String>) -> Response {
    (status, Json(json!({ "error": message.into() }))).into_response()
}

async fn get_library() -> Json<serde_json::Value> {
    Json(json!({ "ops": library::registry() }))
}

#[derive(Serialize)]
struct PipelineResponse {
    pipeline_id: String,
    stored: bool,
    diagnostics: Vec<Diagnostic>,
}

async fn put_pipeline(State(state): State<AppState>, Path(id): Path<String>, body: String) -> Response {
    let (stored, diagnostics) = match parse_document(&body) {
        Ok(graph) => {
            let diagnostics = validate(&graph);
            state
                .0
                .pipelines
                .lock()
                .unwrap()
                .insert(id.clone(), StoredPipeline { graph });
            (true, diagnostics)
        }
        Err(e) => (false, e.to_diagnostics()),
    };
    Json(PipelineResponse {
        pipeline_id: id,
        stored,
        diagnostics,
    })
    .into_response()
}

async fn get_pipeline(State(state): State<AppState>, Path(id): Path<String>) -> Response {
    let pipelines = state.0.pipelines.lock().unwrap();
    match pipelines.get(&id) {
        Some(p) => Json(json!({
            "pipeline_id": id,
            "pipeline": p.graph,
            "diagnostics": validate(&p.graph),
        }))
        .into_response(),
        None => error(StatusCode::NOT_FOUND, format!("unknown pipeline `{id}`")),
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunRequest {
    data_dir: PathBuf,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    allow_warnings: bool,
}

async fn post_run(State(state): State<AppState>, Path(id): Path<String>, body: String) -> Response {
    let req: RunRequest = match serde_json::from_str(&body) {
        Ok(r) => r,
        Err(e) => return error(StatusCode::BAD_REQUEST, format!("invalid run request: {e}")),
    };
    let plan = {
        let pipelines = state.0.pipelines.lock().unwrap();
        let Some(stored) = pipelines.get(&id) else {
            return error(StatusCode::NOT_FOUND, format!("unknown pipeline `{id}`"));
        };
        exec::plan(
            &stored.graph,
            PlanOptions {
                seed: req.seed,
                allow_warnings: req.allow_warnings,
            },
        )
    };
    let plan = match plan {
        Ok(p) => p,
        Err(e @ PlanError::Blocked { .. }) => {
            return (
                StatusCode::CONFLICT,
                Json(json!({ "error": e.to_string(), "diagnostics": e.diagnostics() })),
            )
                .into_response()
        }
        Err(e) => return error(StatusCode::CONFLICT, e.to_string()),
    };

    let n = state.0.counter.fetch_add(1, Ordering::SeqCst) + 1;
    let run_id = format!("run-{n:04}");
    let run_dir = state.0.config.runs_dir.join(&run_id);
    state.0.runs.lock().unwrap().insert(
        run_id.clone(),
        RunEntry {
            pipeline_id: id,
            status: ServiceRunStatus::Queued,
            run_dir: run_dir.clone(),
            manifest: None,
            error: None,
            log: LogBuffer::new(state.0.config.log_capacity),
        },
    );

    let task_state = state.clone();
    let task_id = run_id.clone();
    tokio::spawn(async move {
        let Ok(_permit) = task_state.0.permits.clone().acquire_owned().await else {
            return;
        };
        task_state.advance(&task_id, ServiceRunStatus::Running);
        let observer: LogObserver = {
            let s = task_state.clone();
            let id = task_id.clone();
            Arc::new(move |line: &LogLine| {
                s.with_run(&id, |e| e.log.push(line.to_string()));
            })
        };
        let opts = RunOptions {
            echo_stderr: false,
            observer: Some(observer),
        };
        let data_dir = req.data_dir;
        let outcome = tokio::task::spawn_blocking(move || exec::run(&plan, &data_dir, &run_dir, &opts)).await;
        let (status, manifest, err) = match outcome {
            Ok(Ok(m)) => {
                let status = if m.status == RunStatus::Ok {
                    ServiceRunStatus::Ok
                } else {
                    ServiceRunStatus::Failed
                };
                let err = m.error.as_ref().map(|f| format!("{}: {}", f.box_id, f.message));
                (status, Some(m), err)
            }
            Ok(Err(e)) => (ServiceRunStatus::Failed, None, Some(e.to_string())),
            Err(e) => (ServiceRunStatus::Failed, None, Some(format!("run task panicked: {e}"))),
        };
        task_state.with_run(&task_id, |e| {
            if let (None, Some(msg)) = (&manifest, &err) {
                e.log.push(format!("run failed: {msg}"));
            }
            e.manifest = manifest;
            e.error = err;
        });
        task_state.advance(&task_id, status);
    });

    (
        StatusCode::ACCEPTED,
        Json(json!({ "run_id": run_id, "status": ServiceRunStatus::Queued })),
    )
        .into_response()
}

async fn get_run(State(state): State<AppState>, Path(id): Path<String>) -> Response {
    let body = state.with_run(&id, |e| {
        json!({
            "run_id": id,
            "pipeline_id": e.pipeline_id,
            "status": e.status,
            "run_dir": e.run_dir,
            "error": e.error,
            "manifest": e.manifest,
        })
    });
    match body {
        Some(b) => Json(b).into_response(),
        None => error(StatusCode::NOT_FOUND, format!("unknown run `{id}`")),
    }
}

#[derive(Debug, Deserialize)]
struct LogQuery {
    #[serde(default)]
    after: usize,
}

async fn get_log(State(state): State<AppState>, Path(id): Path<String>, Query(q): Query<LogQuery>) -> Response {
    let body = state.with_run(&id, |e| {
        let (lines, dropped) = e.log.since(q.after);
        json!({
            "run_id": id,
            "status": e.status,
            "lines": lines,
            "next": e.log.end().max(q.after),
            "dropped": dropped,
        })
    });
    match body {
        Some(b) => Json(b).into_response(),
        None => error(StatusCode::NOT_FOUND, format!("unknown run `{id}`")),
    }
}

async fn get_chart(State(state): State<AppState>, Path((id, box_id)): Path<(String, String)>) -> Response {
    let Some((status, run_dir)) = state.with_run(&id, |e| (e.status, e.run_dir.clone())) else {
        return error(StatusCode::NOT_FOUND, format!("unknown run `{id}`"));
    };
    if status.rank() < 2 {
        return error(StatusCode::CONFLICT, format!("run `{id}` has not finished"));
    }
    match tokio::task::spawn_blocking(move || load_chart(&run_dir, &box_id)).await {
        Ok(Ok(doc)) => Json(doc).into_response(),
        Ok(Err(e @ (ChartError::UnknownBox(_) | ChartError::NoReport(_) | ChartError::NoRun(_)))) => {
            error(StatusCode::NOT_FOUND, e.to_string())
        }
        Ok(Err(e)) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}
