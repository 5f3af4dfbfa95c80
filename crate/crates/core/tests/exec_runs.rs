mod common;

use std::fs;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, OnceLock};

use common::*;
use fdf::exec::{dataset_artifact, ExportRecord, PlanError, RunError, LOG_FILE, MANIFEST_FILE};
use fdf::graph::{BoxKind, BoxSpec, PortSpec};
use fdf::numerics::{apply, load_function, sha256_hex, Dataset, Matrix};
use fdf::{plan, run, Flavor, PipelineGraph, PlanOptions, RunManifest, RunOptions, RunStatus};

struct GoldenRuns {
    first: (PathBuf, RunManifest),
    second: (PathBuf, RunManifest),
}

fn golden_runs() -> &'static GoldenRuns {
    static RUNS: OnceLock<GoldenRuns> = OnceLock::new();
    RUNS.get_or_init(|| {
        let root = scratch("exec-golden");
        let (a, b) = (root.join("a"), root.join("b"));
        let ma = run_golden(&a);
        let mb = run_golden(&b);
        GoldenRuns {
            first: (a, ma),
            second: (b, mb),
        }
    })
}

#[test]
fn golden_run_succeeds_with_expected_shape() {
    let (dir, m) = &golden_runs().first;
    assert_eq!(m.status, RunStatus::Ok, "{:?}", m.error);
    assert_eq!(m.plan.len(), 12);
    assert_eq!(m.exports.len(), 3);
    assert!(m.exports.values().all(|e| e.flavor == Flavor::Function));
    for (rel, sha) in &m.artifacts {
        assert_eq!(&sha256_hex(&fs::read(dir.join(rel)).unwrap()), sha, "{rel}");
    }
    let on_disk: RunManifest = serde_json::from_slice(&fs::read(dir.join(MANIFEST_FILE)).unwrap()).unwrap();
    assert_eq!(&on_disk, m);
    for b in ["std_PCA_displ", "std_PCA_eps"] {
        assert!(m.fits[b].explained_variance_total.unwrap() >= 0.999);
    }
    assert!(m.scores["score"].r2_mean >= 0.95);
}

#[test]
fn reruns_are_bit_identical() {
    let runs = golden_runs();
    let (a, b) = (&runs.first.1, &runs.second.1);
    assert_eq!(a.artifacts, b.artifacts);
    assert_eq!(a.without_timings(), b.without_timings());
}

#[test]
fn exported_model_reproduces_predictions() {
    let (dir, m) = &golden_runs().first;
    let ExportRecord { artifact, .. } = &m.exports["model"];
    let model = load_function(&fs::read(dir.join(artifact)).unwrap()).unwrap();
    let read = |rel: String| Dataset::read_csv("d", fs::File::open(dir.join(rel)).unwrap()).unwrap();
    let displ_red = read(dataset_artifact("reduce_displ", "displ_red"));
    let expected = read(dataset_artifact("predict_eps_red", "eps_red_p"));
    let got = apply(&model, &displ_red).unwrap();
    let bits = |d: &Dataset| d.matrix().as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&got), bits(&expected));
}

#[test]
fn log_lines_follow_format() {
    let (dir, _) = &golden_runs().first;
    let log = fs::read_to_string(dir.join(LOG_FILE)).unwrap();
    let mut lines = 0;
    for line in log.lines() {
        let parts: Vec<_> = line.splitn(4, ' ').collect();
        assert_eq!(parts.len(), 4, "{line}");
        assert!(chrono::DateTime::parse_from_rfc3339(parts[0]).is_ok(), "{line}");
        assert!(["INFO", "WARN", "ERROR"].contains(&parts[1]), "{line}");
        lines += 1;
    }
    assert!(lines >= 2 * 12);
}

#[test]
fn plan_orders_steps_topologically_with_id_ties() {
    let p = plan(&fixture_graph(GOLDEN), PlanOptions::default()).unwrap();
    let ids: Vec<_> = p.steps.iter().map(|s| s.box_id.as_str()).collect();
    assert_eq!(
        ids,
        [
            "displ",
            "eps",
            "std_PCA_displ",
            "out_red_displ",
            "reduce_displ",
            "std_PCA_eps",
            "out_inv_eps",
            "reduce_eps",
            "train_surrogate",
            "out_model",
            "predict_eps_red",
            "score"
        ]
    );
    assert_eq!(p.listing().lines().count(), 12);
}

#[test]
fn empty_pipeline_plans_and_runs() {
    let g = PipelineGraph::new("empty");
    let p = plan(&g, PlanOptions::default()).unwrap();
    assert!(p.steps.is_empty() && p.listing().is_empty());
    let dir = scratch("exec-empty");
    let m = run(&p, &dir, &dir.join("run"), &RunOptions::default()).unwrap();
    assert_eq!(m.status, RunStatus::Ok);
}

#[test]
fn warnings_block_unless_allowed() {
    let g = fixture_graph(MISCONNECTED);
    match plan(&g, PlanOptions::default()) {
        Err(PlanError::Blocked {
            errors: 0, warnings: 1, ..
        }) => {}
        other => panic!("{other:?}"),
    }
    let p = plan(
        &g,
        PlanOptions {
            seed: 0,
            allow_warnings: true,
        },
    )
    .unwrap();
    assert_eq!(p.diagnostics.len(), 1);
    assert!(plan(&fixture_graph(OVERRIDDEN), PlanOptions::default()).is_ok());
}

fn small_pipeline(n_components: i64) -> PipelineGraph {
    let mut g = PipelineGraph::new("small");
    g.add_box(
        BoxSpec::new("x", BoxKind::DataSource, "csv")
            .with_param("file", "x.csv")
            .with_outputs([PortSpec::data("x")]),
    )
    .add_box(
        BoxSpec::new("std", BoxKind::Coder, "standardize")
            .with_inputs([PortSpec::data("x")])
            .with_outputs([PortSpec::function("enc"), PortSpec::function("dec")]),
    )
    .add_box(
        BoxSpec::new("z", BoxKind::Processor, "apply")
            .with_inputs([PortSpec::function("enc"), PortSpec::data("x")])
            .with_outputs([PortSpec::data("z")]),
    )
    .add_box(
        BoxSpec::new("pca", BoxKind::Coder, "PCA")
            .with_param("n_components", n_components)
            .with_inputs([PortSpec::data("z")])
            .with_outputs([PortSpec::function("enc"), PortSpec::function("dec")]),
    )
    .add_box(BoxSpec::new("keep", BoxKind::DataExport, "export").with_inputs([PortSpec::data("z")]))
    .connect("x.x", "std.x")
    .connect("std.enc", "z.enc")
    .connect("x.x", "z.x")
    .connect("z.z", "pca.z")
    .connect("z.z", "keep.z");
    g
}

fn write_small_data(dir: &std::path::Path) {
    let m = Matrix::from_fn(8, 3, |i, j| ((i * 7 + j * 3) % 5) as f64 + 0.25 * j as f64);
    fs::create_dir_all(dir).unwrap();
    fs::write(
        dir.join("x.csv"),
        Dataset::with_default_labels("x", m).unwrap().to_csv_bytes(),
    )
    .unwrap();
}

#[test]
fn step_failure_keeps_prior_artifacts() {
    let root = scratch("exec-crash");
    write_small_data(&root);
    let p = plan(&small_pipeline(50), PlanOptions::default()).unwrap();
    let seen = Arc::new(Mutex::new(Vec::new()));
    let sink = seen.clone();
    let opts = RunOptions {
        echo_stderr: false,
        observer: Some(Arc::new(move |l| sink.lock().unwrap().push(l.clone()))),
    };
    let out = root.join("run");
    let m = run(&p, &root, &out, &opts).unwrap();
    assert_eq!(m.status, RunStatus::Failed);
    let failure = m.error.as_ref().unwrap();
    assert_eq!(failure.box_id, "pca");
    assert!(failure.message.contains("n_components"), "{}", failure.message);
    for (rel, sha) in &m.artifacts {
        assert_eq!(&sha256_hex(&fs::read(out.join(rel)).unwrap()), sha);
    }
    assert!(m.artifacts.contains_key(&dataset_artifact("z", "z")));
    assert!(!m.artifacts.keys().any(|k| k.starts_with("functions/pca.")));
    let lines = seen.lock().unwrap();
    assert!(lines
        .iter()
        .any(|l| l.box_id == "pca" && l.message.starts_with("failed")));
    let log = fs::read_to_string(out.join(LOG_FILE)).unwrap();
    assert_eq!(log.lines().count(), lines.len());

    let on_disk: RunManifest = serde_json::from_slice(&fs::read(out.join(MANIFEST_FILE)).unwrap()).unwrap();
    assert_eq!(on_disk, m);
}

#[test]
fn small_pipeline_exports_data() {
    let root = scratch("exec-small");
    write_small_data(&root);
    let p = plan(&small_pipeline(2), PlanOptions::default()).unwrap();
    let m = run(&p, &root, &root.join("run"), &RunOptions::default()).unwrap();
    assert_eq!(m.status, RunStatus::Ok, "{:?}", m.error);
    assert_eq!(m.exports["z"].flavor, Flavor::Data);
}

#[test]
fn missing_input_leaves_no_run() {
    let root = scratch("exec-missing");
    let p = plan(&small_pipeline(2), PlanOptions::default()).unwrap();
    let out = root.join("run");
    assert!(matches!(
        run(&p, &root, &out, &RunOptions::default()),
        Err(RunError::MissingInput { .. })
    ));
    assert!(!out.join(MANIFEST_FILE).exists());
}

#[test]
fn refuses_non_empty_output_directory() {
    let root = scratch("exec-nonempty");
    write_small_data(&root);
    let p = plan(&small_pipeline(2), PlanOptions::default()).unwrap();
    assert!(matches!(
        run(&p, &root, &root, &RunOptions::default()),
        Err(RunError::OutDir(_))
    ));
}
