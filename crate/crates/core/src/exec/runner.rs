use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use thiserror::Error;

use super::log::{Level, LogLine, LogObserver};
use super::manifest::{ExportRecord, FitSummary, RunFailure, RunManifest, RunStatus, ScoreSummary};
use super::plan::{dataset_artifact, function_artifact, ExecutionPlan, Step, StepOutput};
use super::store::{ArtifactStore, LISTING_FILE};
use crate::graph::{BoxKind, Flavor, ParamValue, PortRef};
use crate::numerics::{
    apply, compose, fit_pca, fit_standardizer, save_function, score, sha256_hex, train_mlp, Activation, Batch, Dataset,
    FunctionValue, Provenance, TrainConfig,
};
use crate::typing::PortType;
use crate::ENGINE_VERSION;

#[derive(Clone, Default)]
pub struct RunOptions {
    /// Also print log lines to standard error.
    pub echo_stderr: bool,
    pub observer: Option<LogObserver>,
}

impl std::fmt::Debug for RunOptions {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RunOptions")
            .field("echo_stderr", &self.echo_stderr)
            .field("observer", &self.observer.is_some())
            .finish()
    }
}

/// Failures that prevent a run from starting. Failures of individual steps
/// are recorded in the manifest instead.
#[derive(Debug, Error)]
pub enum RunError {
    #[error("input file for `{box_id}` not found: {}", path.display())]
    MissingInput { box_id: String, path: PathBuf },
    #[error("input file for `{box_id}` is invalid ({}): {message}", path.display())]
    InvalidInput {
        box_id: String,
        path: PathBuf,
        message: String,
    },
    #[error("cannot prepare output directory: {0}")]
    OutDir(std::io::Error),
    #[error("i/o error while finalizing the run: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone)]
enum Value {
    Data(Dataset),
    Function(FunctionValue),
}

struct Context<'a> {
    plan: &'a ExecutionPlan,
    store: ArtifactStore,
    opts: &'a RunOptions,
    run_id: String,
    inputs: BTreeMap<String, Dataset>,
    values: BTreeMap<PortRef, Value>,
    manifest: RunManifest,
}

/// Executes the plan step by step, persisting every intermediate value.
///
/// Data sources are read and hashed up front; a missing or malformed input
/// file is a [`RunError`] and leaves no manifest behind. A step that fails
/// stops the run: artifacts written so far remain and the manifest records
/// the failure with status `failed`.
pub fn run(plan: &ExecutionPlan, data_dir: &Path, out_dir: &Path, opts: &RunOptions) -> Result<RunManifest, RunError> {
    let mut inputs = BTreeMap::new();
    let mut input_hashes = BTreeMap::new();
    for step in plan.steps.iter().filter(|s| s.kind == BoxKind::DataSource) {
        let path = data_dir.join(source_file(step));
        let bytes = fs::read(&path).map_err(|_| RunError::MissingInput {
            box_id: step.box_id.clone(),
            path: path.clone(),
        })?;
        let name = step.outputs.first().map_or(step.box_id.as_str(), |o| o.port.as_str());
        let data = Dataset::read_csv(name, bytes.as_slice()).map_err(|e| RunError::InvalidInput {
            box_id: step.box_id.clone(),
            path: path.clone(),
            message: e.to_string(),
        })?;
        input_hashes.insert(step.box_id.clone(), sha256_hex(&bytes));
        inputs.insert(step.box_id.clone(), data);
    }

    let run_id = {
        let mut seed_material = format!("{}\n{}\n{}\n", plan.pipeline_hash, plan.seed, ENGINE_VERSION);
        for (k, v) in &input_hashes {
            seed_material.push_str(&format!("{k}={v}\n"));
        }
        sha256_hex(seed_material.as_bytes())[..16].to_string()
    };

    let store = ArtifactStore::create(out_dir).map_err(RunError::OutDir)?;
    let listing = plan.listing();
    let manifest = RunManifest {
        engine_version: ENGINE_VERSION.to_string(),
        run_id: run_id.clone(),
        pipeline_name: plan.pipeline_name.clone(),
        pipeline_hash: plan.pipeline_hash.clone(),
        seed: plan.seed,
        status: RunStatus::Ok,
        error: None,
        plan: listing.lines().map(str::to_string).collect(),
        inputs: input_hashes,
        artifacts: BTreeMap::new(),
        exports: BTreeMap::new(),
        scores: BTreeMap::new(),
        fits: BTreeMap::new(),
        diagnostics: plan.diagnostics.clone(),
        timings_ms: BTreeMap::new(),
    };
    let mut ctx = Context {
        plan,
        store,
        opts,
        run_id,
        inputs,
        values: BTreeMap::new(),
        manifest,
    };

    ctx.log(
        Level::Info,
        "",
        format!(
            "run {} of `{}`: {} steps, seed {}",
            ctx.run_id,
            plan.pipeline_name,
            plan.steps.len(),
            plan.seed
        ),
    );
    for d in &plan.diagnostics {
        ctx.log(
            Level::Warn,
            &d.locus.box_id,
            format!("proceeding despite: {}", d.message),
        );
    }
    let hash = ctx.store.write(LISTING_FILE, listing.as_bytes())?;
    ctx.manifest.artifacts.insert(LISTING_FILE.into(), hash);

    for step in &plan.steps {
        let started = Instant::now();
        ctx.log(Level::Info, &step.box_id, format!("start {}/{}", step.kind, step.op));
        let result = ctx.execute(step);
        let ms = started.elapsed().as_secs_f64() * 1e3;
        ctx.manifest.timings_ms.insert(step.box_id.clone(), ms);
        match result {
            Ok(()) => ctx.log(Level::Info, &step.box_id, format!("done in {ms:.1} ms")),
            Err(message) => {
                ctx.log(Level::Error, &step.box_id, format!("failed: {message}"));
                ctx.manifest.status = RunStatus::Failed;
                ctx.manifest.error = Some(RunFailure {
                    box_id: step.box_id.clone(),
                    message,
                });
                break;
            }
        }
    }

    ctx.log(Level::Info, "", format!("run finished: {}", ctx.manifest.status));
    ctx.store.finalize(ctx.manifest.to_json().as_bytes())?;
    Ok(ctx.manifest)
}

fn source_file(step: &Step) -> String {
    step.param("file")
        .and_then(ParamValue::as_str)
        .map(str::to_string)
        .unwrap_or_else(|| format!("{}.csv", step.box_id))
}

fn data_tag(out: &StepOutput) -> Option<crate::typing::TypeTag> {
    out.ty.as_ref().and_then(PortType::tag).cloned()
}

type StepResult = Result<(), String>;

impl Context<'_> {
    fn log(&self, level: Level, box_id: &str, message: String) {
        let line = LogLine::now(level, box_id, message);
        let text = line.to_string();
        if self.opts.echo_stderr {
            eprintln!("{text}");
        }
        // The log is best effort; a failed append must not abort the run.
        let _ = self.store.append_log(&text);
        if let Some(observer) = &self.opts.observer {
            observer(&line);
        }
    }

    fn persist(&mut self, rel: &str, bytes: &[u8]) -> StepResult {
        let hash = self
            .store
            .write(rel, bytes)
            .map_err(|e| format!("writing {rel}: {e}"))?;
        self.manifest.artifacts.insert(rel.to_string(), hash);
        Ok(())
    }

    fn input(&self, step: &Step, slot: usize) -> Result<&Value, String> {
        let binding = step
            .inputs
            .get(slot)
            .ok_or_else(|| format!("missing input slot {slot}"))?;
        self.values
            .get(&binding.source)
            .ok_or_else(|| format!("no value produced at {}", binding.source))
    }

    fn data_input(&self, step: &Step, slot: usize) -> Result<Dataset, String> {
        match self.input(step, slot)? {
            Value::Data(d) => Ok(d.clone()),
            Value::Function(_) => Err(format!("input {slot} carries a function, expected data")),
        }
    }

    fn function_input(&self, step: &Step, slot: usize) -> Result<FunctionValue, String> {
        match self.input(step, slot)? {
            Value::Function(f) => Ok(f.clone()),
            Value::Data(_) => Err(format!("input {slot} carries data, expected a function")),
        }
    }

    fn emit_data(&mut self, step: &Step, slot: usize, data: Dataset) -> StepResult {
        let out = &step.outputs[slot];
        let data = data.renamed(out.port.clone()).with_tag(data_tag(out));
        self.persist(&out.artifact, &data.to_csv_bytes())?;
        self.values
            .insert(PortRef::new(step.box_id.clone(), out.port.clone()), Value::Data(data));
        Ok(())
    }

    fn emit_function(&mut self, step: &Step, slot: usize, f: FunctionValue) -> StepResult {
        let out = &step.outputs[slot];
        let f = match out.ty.as_ref().and_then(PortType::signature) {
            Some(sig) => f.with_types(Some(sig.input.clone()), Some(sig.output.clone())),
            None => f,
        }
        .with_provenance(Provenance {
            box_id: step.box_id.clone(),
            port: out.port.clone(),
            run_id: self.run_id.clone(),
        });
        self.persist(&out.artifact, &save_function(&f))?;
        self.values
            .insert(PortRef::new(step.box_id.clone(), out.port.clone()), Value::Function(f));
        Ok(())
    }

    fn execute(&mut self, step: &Step) -> StepResult {
        match (step.kind, step.op.as_str()) {
            (BoxKind::DataSource, _) => {
                let data = self.inputs.remove(&step.box_id).ok_or("input not loaded")?;
                self.emit_data(step, 0, data)
            }
            (BoxKind::Coder, op) => self.fit_coder(step, op),
            (BoxKind::Trainer, _) => self.train(step),
            (BoxKind::Processor, "apply") => {
                let f = self.function_input(step, 0)?;
                let x = self.data_input(step, 1)?;
                let y = apply(&f, &x).map_err(|e| e.to_string())?;
                self.emit_data(step, 0, y)
            }
            (BoxKind::Processor, "compose") => {
                let first = self.function_input(step, 0)?;
                let then = self.function_input(step, 1)?;
                let f = compose(vec![first, then]).map_err(|e| e.to_string())?;
                self.emit_function(step, 0, f)
            }
            (BoxKind::Processor, "score") => {
                let actual = self.data_input(step, 0)?;
                let predicted = self.data_input(step, 1)?;
                let report = score(&actual, &predicted).map_err(|e| e.to_string())?;
                let path = format!("reports/{}.score.json", step.box_id);
                let json = serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?;
                self.persist(&path, json.as_bytes())?;
                self.log(
                    Level::Info,
                    &step.box_id,
                    format!(
                        "mean r2 {:.6} over {} outputs, {} samples",
                        report.r2_mean,
                        report.r2.len(),
                        report.n_samples
                    ),
                );
                self.manifest
                    .scores
                    .insert(step.box_id.clone(), ScoreSummary::from_report(&report, path));
                Ok(())
            }
            (BoxKind::FunctionExport, _) => {
                let f = self.function_input(step, 0)?;
                let port = &step.inputs[0].port;
                let rel = function_artifact(&step.box_id, port);
                let bytes = save_function(&f);
                self.persist(&rel, &bytes)?;
                self.record_export(step, port, Flavor::Function, rel, &bytes)
            }
            (BoxKind::DataExport, _) => {
                let d = self.data_input(step, 0)?;
                let port = &step.inputs[0].port;
                let rel = dataset_artifact(&step.box_id, port);
                let bytes = d.to_csv_bytes();
                self.persist(&rel, &bytes)?;
                self.record_export(step, port, Flavor::Data, rel, &bytes)
            }
            (kind, op) => Err(format!("no implementation for {kind}/{op}")),
        }
    }

    fn record_export(&mut self, step: &Step, port: &str, flavor: Flavor, artifact: String, bytes: &[u8]) -> StepResult {
        let name = step
            .param("name")
            .and_then(ParamValue::as_str)
            .unwrap_or(port)
            .to_string();
        if self.manifest.exports.contains_key(&name) {
            return Err(format!("export name `{name}` is already taken"));
        }
        self.log(Level::Info, &step.box_id, format!("exported `{name}` to {artifact}"));
        self.manifest.exports.insert(
            name,
            ExportRecord {
                box_id: step.box_id.clone(),
                flavor,
                artifact,
                sha256: sha256_hex(bytes),
            },
        );
        Ok(())
    }

    fn fit_coder(&mut self, step: &Step, op: &str) -> StepResult {
        let data = self.data_input(step, 0)?;
        let n_components = || {
            step.param("n_components")
                .and_then(ParamValue::as_i64)
                .filter(|&k| k > 0)
                .map(|k| k as usize)
                .ok_or_else(|| "n_components must be a positive integer".to_string())
        };
        let mut summary = FitSummary::default();
        let (encode, decode) = match op {
            "standardize" => fit_standardizer(&data).map_err(|e| e.to_string())?,
            "PCA" => {
                let fit = fit_pca(&data, n_components()?).map_err(|e| e.to_string())?;
                summary.explained_variance_total = Some(fit.explained_variance_ratio.iter().sum());
                summary.explained_variance_ratio = Some(fit.explained_variance_ratio);
                (fit.project, fit.backproject)
            }
            "std_PCA" => {
                let (std_enc, std_dec) = fit_standardizer(&data).map_err(|e| e.to_string())?;
                let standardized = apply(&std_enc, &data).map_err(|e| e.to_string())?;
                let fit = fit_pca(&standardized, n_components()?).map_err(|e| e.to_string())?;
                summary.explained_variance_total = Some(fit.explained_variance_ratio.iter().sum());
                summary.explained_variance_ratio = Some(fit.explained_variance_ratio);
                let encode = compose(vec![std_enc, fit.project]).map_err(|e| e.to_string())?;
                let decode = compose(vec![fit.backproject, std_dec]).map_err(|e| e.to_string())?;
                (encode, decode)
            }
            other => return Err(format!("unknown coder op `{other}`")),
        };
        if let Some(total) = summary.explained_variance_total {
            self.log(
                Level::Info,
                &step.box_id,
                format!(
                    "explained variance ratio {total:.9} with {} components",
                    summary.explained_variance_ratio.as_ref().map_or(0, Vec::len)
                ),
            );
        }
        self.manifest.fits.insert(step.box_id.clone(), summary);
        self.emit_function(step, 0, encode)?;
        self.emit_function(step, 1, decode)
    }

    fn train(&mut self, step: &Step) -> StepResult {
        let x = self.data_input(step, 0)?;
        let y = self.data_input(step, 1)?;
        let cfg = train_config(step, self.plan.seed)?;
        let normalize = step.param("normalize").and_then(ParamValue::as_bool).unwrap_or(true);

        let (model, history) = if normalize {
            let (x_enc, _) = fit_standardizer(&x).map_err(|e| e.to_string())?;
            let (y_enc, y_dec) = fit_standardizer(&y).map_err(|e| e.to_string())?;
            let xs = apply(&x_enc, &x).map_err(|e| e.to_string())?;
            let ys = apply(&y_enc, &y).map_err(|e| e.to_string())?;
            let (net, history) = train_mlp(&xs, &ys, &cfg).map_err(|e| e.to_string())?;
            let model = compose(vec![x_enc, net, y_dec]).map_err(|e| e.to_string())?;
            (model, history)
        } else {
            train_mlp(&x, &y, &cfg).map_err(|e| e.to_string())?
        };

        let (first, last) = (history[0], *history.last().unwrap());
        self.log(
            Level::Info,
            &step.box_id,
            format!("trained {} epochs: loss {first:.6e} -> {last:.6e}", cfg.epochs),
        );
        let report = serde_json::json!({
            "config": cfg,
            "normalize": normalize,
            "loss_history": history,
        });
        let path = format!("reports/{}.train.json", step.box_id);
        let json = serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?;
        self.persist(&path, json.as_bytes())?;
        self.manifest.fits.insert(
            step.box_id.clone(),
            FitSummary {
                epochs: Some(cfg.epochs),
                initial_loss: Some(first),
                final_loss: Some(last),
                ..FitSummary::default()
            },
        );
        self.emit_function(step, 0, model)
    }
}

/// Trainer parameters, falling back to [`TrainConfig::default`] and to the
/// run seed.
pub fn train_config(step: &Step, run_seed: u64) -> Result<TrainConfig, String> {
    let mut cfg = TrainConfig {
        seed: run_seed,
        ..TrainConfig::default()
    };
    if let Some(v) = step.param("hidden_layers").and_then(ParamValue::as_str) {
        cfg.hidden_layers = v
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<usize>().map_err(|_| format!("bad hidden layer width {s:?}")))
            .collect::<Result<_, _>>()?;
    }
    if let Some(v) = step.param("activation").and_then(ParamValue::as_str) {
        cfg.activation = v.parse::<Activation>().map_err(|e| e.to_string())?;
    }
    if let Some(v) = step.param("learning_rate").and_then(ParamValue::as_f64) {
        cfg.learning_rate = v;
    }
    if let Some(v) = step.param("epochs").and_then(ParamValue::as_i64) {
        cfg.epochs = usize::try_from(v).map_err(|_| "epochs must be non-negative".to_string())?;
    }
    if let Some(v) = step.param("batch").and_then(ParamValue::as_i64) {
        cfg.batch = Batch::Size(usize::try_from(v).map_err(|_| "batch must be positive".to_string())?);
    }
    if let Some(v) = step.param("seed").and_then(ParamValue::as_i64) {
        cfg.seed = v as u64;
    }
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}
