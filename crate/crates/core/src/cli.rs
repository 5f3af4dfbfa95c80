//! The `fdf` command line.
//!
//! Exit codes: `0` success, `1` diagnostics reported (or the request names
//! something the pipeline or run does not have), `2` runtime failure
//! (missing files, failed runs, i/o). `--format structured` prints one JSON
//! document per invocation; see `docs/cli-output.md`.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::net::{Ipv4Addr, SocketAddr};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::chart::{load_chart, render_svg, ChartError};
use crate::diagnostics::{count, Diagnostic, Severity};
use crate::exec::{self, DoeSpec, PlanError, PlanOptions, RunManifest, RunOptions, MANIFEST_FILE};
use crate::graph::{parse_pipeline, validate, Flavor, PipelineGraph};
use crate::numerics::load_function;
use crate::service::{self, ServiceConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DIAGNOSTICS: i32 = 1;
pub const EXIT_FAILURE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "fdf", version, about = "Function+Data Flow pipelines")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Text,
    Structured,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a pipeline for structural errors and typing warnings.
    Check {
        pipeline: PathBuf,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Execute a pipeline, writing every artifact into a fresh run directory.
    Run {
        pipeline: PathBuf,
        /// Directory holding the data source files.
        #[arg(long)]
        data: PathBuf,
        /// Run directory to create (must be absent or empty).
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        plan: PlanArgs,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
        /// Echo log lines to standard error.
        #[arg(long, short)]
        verbose: bool,
    },
    /// Print the execution plan without running it.
    Lower {
        pipeline: PathBuf,
        #[command(flatten)]
        plan: PlanArgs,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Print the chart-data document of a score box from a finished run.
    Chart {
        run_dir: PathBuf,
        box_id: String,
        /// Also write an SVG scatter plot here.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Copy an exported function or dataset out of a finished run.
    Export {
        run_dir: PathBuf,
        /// Export name as listed in the run manifest.
        name: String,
        dest: PathBuf,
    },
    /// Generate a synthetic design-of-experiments dataset.
    Generate(GenerateArgs),
    /// Serve the HTTP API on localhost.
    Serve {
        #[arg(long, env = "FDF_PORT", default_value_t = 7878)]
        port: u16,
        #[arg(long, default_value = "fdf-runs")]
        runs_dir: PathBuf,
        /// Maximum number of concurrent runs.
        #[arg(long, default_value_t = 2)]
        max_runs: usize,
    },
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Run even if typing warnings remain.
    #[arg(long)]
    pub allow_warnings: bool,
}

impl PlanArgs {
    fn options(&self) -> PlanOptions {
        PlanOptions {
            seed: self.seed,
            allow_warnings: self.allow_warnings,
        }
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    #[arg(long, default_value_t = 1200)]
    pub displ_dim: usize,
    #[arg(long, default_value_t = 1500)]
    pub eps_dim: usize,
    #[arg(long, default_value_t = 10)]
    pub intrinsic_dim: usize,
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
}

/// Runs the CLI on `args` (including the program name) and returns the exit
/// code.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_FAILURE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let mut io = Io { out, err };
    match cli.command {
        Command::Check { pipeline, format } => cmd_check(&mut io, &pipeline, format),
        Command::Run {
            pipeline,
            data,
            out,
            plan,
            format,
            verbose,
        } => cmd_run(&mut io, &pipeline, &data, &out, plan.options(), format, verbose),
        Command::Lower { pipeline, plan, format } => cmd_lower(&mut io, &pipeline, plan.options(), format),
        Command::Chart { run_dir, box_id, svg } => cmd_chart(&mut io, &run_dir, &box_id, svg.as_deref()),
        Command::Export { run_dir, name, dest } => cmd_export(&mut io, &run_dir, &name, &dest),
        Command::Generate(args) => cmd_generate(&mut io, &args),
        Command::Serve {
            port,
            runs_dir,
            max_runs,
        } => cmd_serve(&mut io, port, runs_dir, max_runs),
    }
}

struct Io<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

impl Io<'_> {
    fn fail(&mut self, code: i32, message: impl std::fmt::Display) -> i32 {
        let _ = writeln!(self.err, "error: {message}");
        code
    }

    fn json(&mut self, value: &serde_json::Value) {
        let _ = writeln!(
            self.out,
            "{}",
            serde_json::to_string_pretty(value).expect("json value serializes")
        );
    }
}

enum Loaded {
    Graph(PipelineGraph),
    Invalid(Vec<Diagnostic>),
}

fn load(io: &mut Io, path: &Path) -> Result<Loaded, i32> {
    let text =
        fs::read_to_string(path).map_err(|e| io.fail(EXIT_FAILURE, format!("cannot read {}: {e}", path.display())))?;
    Ok(match parse_pipeline(&text) {
        Ok(g) => Loaded::Graph(g),
        Err(e) => Loaded::Invalid(e.to_diagnostics()),
    })
}

fn diagnostics_json(diags: &[Diagnostic]) -> serde_json::Value {
    json!({
        "errors": count(diags, Severity::Error),
        "warnings": count(diags, Severity::Warning),
        "diagnostics": diags,
    })
}

fn print_diagnostics(io: &mut Io, diags: &[Diagnostic]) {
    for d in diags {
        let _ = writeln!(io.out, "{d}");
    }
}

fn cmd_check(io: &mut Io, path: &Path, format: Format) -> i32 {
    let diags = match load(io, path) {
        Ok(Loaded::Graph(g)) => validate(&g),
        Ok(Loaded::Invalid(d)) => d,
        Err(code) => return code,
    };
    match format {
        Format::Text => print_diagnostics(io, &diags),
        Format::Structured => io.json(&diagnostics_json(&diags)),
    }
    if diags.is_empty() {
        EXIT_OK
    } else {
        EXIT_DIAGNOSTICS
    }
}

fn planned(io: &mut Io, path: &Path, opts: PlanOptions, format: Format) -> Result<exec::ExecutionPlan, i32> {
    let graph = match load(io, path)? {
        Loaded::Graph(g) => g,
        Loaded::Invalid(diags) => return Err(blocked(io, &diags, "pipeline is invalid", format)),
    };
    exec::plan(&graph, opts).map_err(|e| match &e {
        PlanError::Blocked { diagnostics, .. } => {
            let msg = format!("{e}; fix them, add overrides, or pass --allow-warnings");
            blocked(io, diagnostics, &msg, format)
        }
        PlanError::Cycle(_) => io.fail(EXIT_DIAGNOSTICS, e),
    })
}

fn blocked(io: &mut Io, diags: &[Diagnostic], message: &str, format: Format) -> i32 {
    match format {
        Format::Text => print_diagnostics(io, diags),
        Format::Structured => {
            let mut v = diagnostics_json(diags);
            v["status"] = json!("blocked");
            io.json(&v);
        }
    }
    io.fail(EXIT_DIAGNOSTICS, message)
}

fn cmd_run(
    io: &mut Io,
    path: &Path,
    data: &Path,
    out_dir: &Path,
    opts: PlanOptions,
    format: Format,
    verbose: bool,
) -> i32 {
    let plan = match planned(io, path, opts, format) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let run_opts = RunOptions {
        echo_stderr: verbose,
        observer: None,
    };
    let manifest = match exec::run(&plan, data, out_dir, &run_opts) {
        Ok(m) => m,
        Err(e) => return io.fail(EXIT_FAILURE, e),
    };
    let manifest_path = out_dir.join(MANIFEST_FILE);
    match format {
        Format::Text => {
            let _ = writeln!(io.out, "run {}: {}", manifest.run_id, manifest.status);
            let _ = writeln!(io.out, "manifest: {}", manifest_path.display());
            for (box_id, s) in &manifest.scores {
                let _ = writeln!(io.out, "{box_id}: mean r2 {:.6}", s.r2_mean);
            }
        }
        Format::Structured => io.json(&run_summary(&manifest, &manifest_path)),
    }
    match &manifest.error {
        None => EXIT_OK,
        Some(f) => io.fail(EXIT_FAILURE, format!("box `{}` failed: {}", f.box_id, f.message)),
    }
}

fn run_summary(m: &RunManifest, manifest_path: &Path) -> serde_json::Value {
    let scores: serde_json::Map<_, _> = m
        .scores
        .iter()
        .map(|(k, s)| (k.clone(), serde_json::to_value(s).expect("score serializes")))
        .collect();
    json!({
        "status": m.status,
        "run_id": m.run_id,
        "manifest": manifest_path,
        "error": m.error,
        "scores": scores,
        "exports": m.exports,
    })
}

fn cmd_lower(io: &mut Io, path: &Path, opts: PlanOptions, format: Format) -> i32 {
    let plan = match planned(io, path, opts, format) {
        Ok(p) => p,
        Err(code) => return code,
    };
    match format {
        Format::Text => {
            let _ = io.out.write_all(plan.listing().as_bytes());
        }
        Format::Structured => io.json(&serde_json::to_value(&plan).expect("plan serializes")),
    }
    EXIT_OK
}

fn cmd_chart(io: &mut Io, run_dir: &Path, box_id: &str, svg: Option<&Path>) -> i32 {
    let doc = match load_chart(run_dir, box_id) {
        Ok(d) => d,
        Err(e @ (ChartError::UnknownBox(_) | ChartError::NoReport(_))) => return io.fail(EXIT_DIAGNOSTICS, e),
        Err(e) => return io.fail(EXIT_FAILURE, e),
    };
    if let Some(path) = svg {
        if let Err(e) = fs::write(path, render_svg(&doc)) {
            return io.fail(EXIT_FAILURE, format!("cannot write {}: {e}", path.display()));
        }
    }
    io.json(&serde_json::to_value(&doc).expect("chart serializes"));
    EXIT_OK
}

fn cmd_export(io: &mut Io, run_dir: &Path, name: &str, dest: &Path) -> i32 {
    let manifest: RunManifest = match fs::read(run_dir.join(MANIFEST_FILE))
        .map_err(|e| e.to_string())
        .and_then(|b| serde_json::from_slice(&b).map_err(|e| e.to_string()))
    {
        Ok(m) => m,
        Err(e) => return io.fail(EXIT_FAILURE, format!("no finished run at {}: {e}", run_dir.display())),
    };
    let Some(record) = manifest.exports.get(name) else {
        let known: Vec<_> = manifest.exports.keys().cloned().collect();
        return io.fail(
            EXIT_DIAGNOSTICS,
            format!("run has no export `{name}` (exports: {})", known.join(", ")),
        );
    };
    let bytes = match fs::read(run_dir.join(&record.artifact)) {
        Ok(b) => b,
        Err(e) => return io.fail(EXIT_FAILURE, format!("cannot read {}: {e}", record.artifact)),
    };
    if record.flavor == Flavor::Function {
        if let Err(e) = load_function(&bytes) {
            return io.fail(EXIT_FAILURE, format!("artifact {} is unusable: {e}", record.artifact));
        }
    }
    if let Err(e) = fs::write(dest, &bytes) {
        return io.fail(EXIT_FAILURE, format!("cannot write {}: {e}", dest.display()));
    }
    let _ = writeln!(io.out, "{}", dest.display());
    EXIT_OK
}

fn cmd_generate(io: &mut Io, a: &GenerateArgs) -> i32 {
    let spec = DoeSpec {
        n_samples: a.samples,
        displ_dim: a.displ_dim,
        eps_dim: a.eps_dim,
        intrinsic_dim: a.intrinsic_dim,
        noise: a.noise,
        seed: a.seed,
    };
    let files = match exec::generate_doe_dataset(&spec, &a.out) {
        Ok(f) => f,
        Err(e @ exec::DoeError::Invalid(_)) => return io.fail(EXIT_DIAGNOSTICS, e),
        Err(e) => return io.fail(EXIT_FAILURE, e),
    };
    match a.format {
        Format::Text => {
            for p in [&files.displ, &files.eps, &files.params] {
                let _ = writeln!(io.out, "{}", p.display());
            }
        }
        Format::Structured => io.json(&json!({
            "spec": spec,
            "displ": files.displ,
            "eps": files.eps,
            "params": files.params,
        })),
    }
    EXIT_OK
}

fn cmd_serve(io: &mut Io, port: u16, runs_dir: PathBuf, max_runs: usize) -> i32 {
    let config = ServiceConfig {
        runs_dir,
        max_concurrent_runs: max_runs,
        ..ServiceConfig::default()
    };
    let runtime = match tokio::runtime::Runtime::new() {
        Ok(r) => r,
        Err(e) => return io.fail(EXIT_FAILURE, e),
    };
    let addr = SocketAddr::from((Ipv4Addr::LOCALHOST, port));
    match runtime.block_on(service::serve(addr, config)) {
        Ok(()) => EXIT_OK,
        Err(e) => io.fail(EXIT_FAILURE, e),
    }
}
