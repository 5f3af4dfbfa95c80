#![allow(dead_code, clippy::needless_range_loop)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use fdf::exec::{generate_doe_dataset, DoeSpec};
use fdf::graph::{BoxKind, BoxSpec, Flavor, PipelineGraph, PortSpec};
use fdf::numerics::mlp::{Activation, Mlp};
use fdf::numerics::rng::SeededRng;
use fdf::numerics::{fit_pca, Dataset, FunctionBody, Matrix};
use fdf::{parse_pipeline, plan, run, PlanOptions, RunManifest, RunOptions};

pub const GOLDEN: &str = "rom_pipeline.fdf.json";
pub const MISCONNECTED: &str = "rom_misconnected.fdf.json";
pub const OVERRIDDEN: &str = "rom_overridden.fdf.json";
pub const BROKEN: &str = "rom_broken.fdf.json";
pub const TRUNCATED: &str = "truncated.fdf.json";
pub const GOLDEN_SEED: u64 = 7;

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn fixture_text(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).unwrap()
}

pub fn fixture_graph(name: &str) -> PipelineGraph {
    parse_pipeline(&fixture_text(name)).unwrap()
}

/// Fresh directory under cargo's per-target scratch space.
pub fn scratch(label: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(format!("{label}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

/// Default DoE dataset, generated once per test binary.
pub fn golden_data() -> &'static Path {
    static DIR: OnceLock<PathBuf> = OnceLock::new();
    DIR.get_or_init(|| {
        let dir = scratch("golden-data");
        generate_doe_dataset(&DoeSpec::default(), &dir).unwrap();
        dir
    })
}

pub fn run_golden(out: &Path) -> RunManifest {
    let plan = plan(
        &fixture_graph(GOLDEN),
        PlanOptions {
            seed: GOLDEN_SEED,
            allow_warnings: false,
        },
    )
    .unwrap();
    run(&plan, golden_data(), out, &RunOptions::default()).unwrap()
}

pub fn random_matrix(rng: &mut SeededRng, rows: usize, cols: usize, scale: f64) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.normal() * scale)
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues in descending order and eigenvectors as columns.
pub fn symmetric_eigen(a: &Matrix) -> (Vec<f64>, Matrix) {
    let n = a.rows();
    let mut m = a.clone();
    let mut v = Matrix::identity(n);
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)] * m[(i, j)])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[(p, q)].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * m[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[(k, p)], m[(k, q)]);
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[(p, k)], m[(q, k)]);
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(j, j)].partial_cmp(&m[(i, i)]).unwrap());
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let vectors = Matrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    (values, vectors)
}

/// Sample covariance (divided by n - 1) of the rows of `x`.
pub fn covariance(x: &Matrix) -> Matrix {
    let (n, p) = (x.rows(), x.cols());
    let mean: Vec<f64> = (0..p)
        .map(|j| (0..n).map(|i| x[(i, j)]).sum::<f64>() / n as f64)
        .collect();
    Matrix::from_fn(p, p, |a, b| {
        (0..n)
            .map(|i| (x[(i, a)] - mean[a]) * (x[(i, b)] - mean[b]))
            .sum::<f64>()
            / (n - 1) as f64
    })
}

/// A random well-formed graph. Every box only reads ports of earlier boxes,
/// so file order is a topological order. Port and box names are generic.
pub fn random_graph(seed: u64) -> PipelineGraph {
    let mut rng = SeededRng::new(seed);
    let mut g = PipelineGraph::new(format!("random_{seed}"));
    let mut data: Vec<String> = Vec::new();
    let mut funcs: Vec<String> = Vec::new();

    let sources = 1 + rng.below(3) as usize;
    for i in 0..sources {
        let id = format!("src{i}");
        g.add_box(
            BoxSpec::new(&id, BoxKind::DataSource, "csv")
                .with_param("file", format!("{id}.csv"))
                .with_outputs(vec![PortSpec::data("out")]),
        );
        data.push(format!("{id}.out"));
    }

    let extra = 3 + rng.below(10) as usize;
    for i in 0..extra {
        let id = format!("b{i}");
        let pick = |rng: &mut SeededRng, pool: &[String]| pool[rng.below(pool.len() as u64) as usize].clone();
        match rng.below(7) {
            0 => {
                let op = ["standardize", "PCA", "std_PCA"][rng.below(3) as usize];
                let mut b = BoxSpec::new(&id, BoxKind::Coder, op)
                    .with_inputs(vec![PortSpec::data("train")])
                    .with_outputs(vec![PortSpec::function("enc"), PortSpec::function("dec")]);
                if op != "standardize" {
                    b = b.with_param("n_components", 1i64);
                }
                g.add_box(b);
                g.connect(&pick(&mut rng, &data), &format!("{id}.train"));
                funcs.push(format!("{id}.enc"));
                funcs.push(format!("{id}.dec"));
            }
            1 => {
                g.add_box(
                    BoxSpec::new(&id, BoxKind::Trainer, "mlp")
                        .with_inputs(vec![PortSpec::data("x"), PortSpec::data("y")])
                        .with_outputs(vec![PortSpec::function("model")]),
                );
                g.connect(&pick(&mut rng, &data), &format!("{id}.x"));
                g.connect(&pick(&mut rng, &data), &format!("{id}.y"));
                funcs.push(format!("{id}.model"));
            }
            2 | 3 if !funcs.is_empty() => {
                g.add_box(
                    BoxSpec::new(&id, BoxKind::Processor, "apply")
                        .with_inputs(vec![PortSpec::function("f"), PortSpec::data("x")])
                        .with_outputs(vec![PortSpec::data("y")]),
                );
                g.connect(&pick(&mut rng, &funcs), &format!("{id}.f"));
                g.connect(&pick(&mut rng, &data), &format!("{id}.x"));
                data.push(format!("{id}.y"));
            }
            4 if !funcs.is_empty() => {
                g.add_box(
                    BoxSpec::new(&id, BoxKind::Processor, "compose")
                        .with_inputs(vec![PortSpec::function("first"), PortSpec::function("then")])
                        .with_outputs(vec![PortSpec::function("c")]),
                );
                g.connect(&pick(&mut rng, &funcs), &format!("{id}.first"));
                g.connect(&pick(&mut rng, &funcs), &format!("{id}.then"));
                funcs.push(format!("{id}.c"));
            }
            5 => {
                g.add_box(
                    BoxSpec::new(&id, BoxKind::Processor, "score")
                        .with_inputs(vec![PortSpec::data("actual"), PortSpec::data("predicted")]),
                );
                g.connect(&pick(&mut rng, &data), &format!("{id}.actual"));
                g.connect(&pick(&mut rng, &data), &format!("{id}.predicted"));
            }
            _ if !funcs.is_empty() => {
                g.add_box(
                    BoxSpec::new(&id, BoxKind::FunctionExport, "export").with_inputs(vec![PortSpec::function("f")]),
                );
                g.connect(&pick(&mut rng, &funcs), &format!("{id}.f"));
            }
            _ => {
                g.add_box(BoxSpec::new(&id, BoxKind::DataExport, "export").with_inputs(vec![PortSpec::data("d")]));
                g.connect(&pick(&mut rng, &data), &format!("{id}.d"));
            }
        }
    }
    g
}

/// Every data output port of `g`, in file order.
pub fn data_outputs(g: &PipelineGraph) -> Vec<String> {
    g.boxes
        .iter()
        .flat_map(|b| {
            b.out_ports
                .iter()
                .filter(|p| p.flavor == Flavor::Data)
                .map(move |p| format!("{}.{}", b.id, p.name))
        })
        .collect()
}

/// Independent model of the implicit typing rules for override-free graphs
/// whose file order is topological. Types are plain strings; returns the
/// expected `(code, box, port)` of every warning in file order.
pub fn expected_warnings(g: &PipelineGraph) -> Vec<(String, String, String)> {
    let src = |b: &BoxSpec, slot: usize| -> String {
        let to = format!("{}.{}", b.id, b.in_ports[slot].name);
        g.edges
            .iter()
            .find(|e| e.to.to_string() == to)
            .unwrap()
            .from
            .to_string()
    };
    let mut data: BTreeMap<String, String> = BTreeMap::new();
    let mut funcs: BTreeMap<String, (String, String)> = BTreeMap::new();
    let mut out = Vec::new();
    for b in &g.boxes {
        let port = |slot: usize| format!("{}.{}", b.id, b.out_ports[slot].name);
        match (b.kind, b.op.as_str()) {
            (BoxKind::DataSource, _) => {
                data.insert(port(0), port(0));
            }
            (BoxKind::Coder, _) => {
                let t = data[&src(b, 0)].clone();
                let enc = format!("{t}/{}:encode", b.id);
                funcs.insert(port(0), (t.clone(), enc.clone()));
                funcs.insert(port(1), (enc, t));
            }
            (BoxKind::Trainer, _) => {
                funcs.insert(port(0), (data[&src(b, 0)].clone(), data[&src(b, 1)].clone()));
            }
            (BoxKind::Processor, "apply") => {
                let (fin, fout) = funcs[&src(b, 0)].clone();
                if data[&src(b, 1)] != fin {
                    out.push(("W-type-mismatch".into(), b.id.clone(), b.in_ports[1].name.clone()));
                }
                data.insert(port(0), fout);
            }
            (BoxKind::Processor, "compose") => {
                let (a_in, a_out) = funcs[&src(b, 0)].clone();
                let (b_in, b_out) = funcs[&src(b, 1)].clone();
                if a_out != b_in {
                    out.push(("W-compose-mismatch".into(), b.id.clone(), b.in_ports[1].name.clone()));
                }
                funcs.insert(port(0), (a_in, b_out));
            }
            (BoxKind::Processor, "score") if data[&src(b, 0)] != data[&src(b, 1)] => {
                out.push(("W-score-mismatch".into(), b.id.clone(), b.in_ports[1].name.clone()));
            }
            _ => {}
        }
    }
    out
}

/// Worst relative gap between backprop gradients and central differences
/// (h = 1e-5) over every parameter of a random small network.
pub fn finite_difference_check(seed: u64, activation: Activation) -> f64 {
    let mut rng = SeededRng::new(seed);
    let n_in = 1 + rng.below(4) as usize;
    let n_out = 1 + rng.below(3) as usize;
    let hidden: Vec<usize> = (0..1 + rng.below(2)).map(|_| 2 + rng.below(4) as usize).collect();
    let mut widths = vec![n_in];
    widths.extend(&hidden);
    widths.push(n_out);
    let mut net = Mlp::init(&widths, activation, &mut rng);
    for layer in &mut net.layers {
        for b in &mut layer.bias {
            *b = rng.uniform_range(-0.5, 0.5);
        }
    }
    let n = 5;
    let x = random_matrix(&mut rng, n, n_in, 1.0);
    let y = random_matrix(&mut rng, n, n_out, 1.0);
    let rows: Vec<usize> = (0..n).collect();
    let (_, grads) = net.loss_and_gradient(&x, &y, &rows);

    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for l in 0..net.layers.len() {
        let (r, c) = (net.layers[l].weights.rows(), net.layers[l].weights.cols());
        let mut check = |net: &mut Mlp, analytic: f64, get: &dyn Fn(&mut Mlp) -> &mut f64| {
            let orig = *get(net);
            *get(net) = orig + h;
            let plus = net.loss(&x, &y, &rows);
            *get(net) = orig - h;
            let minus = net.loss(&x, &y, &rows);
            *get(net) = orig;
            let numeric = (plus - minus) / (2.0 * h);
            let scale = analytic.abs().max(numeric.abs()).max(1e-6);
            worst = worst.max((analytic - numeric).abs() / scale);
        };
        for i in 0..r {
            for j in 0..c {
                check(&mut net, grads[l].weights[(i, j)], &move |m: &mut Mlp| {
                    &mut m.layers[l].weights[(i, j)]
                });
            }
            check(&mut net, grads[l].bias[i], &move |m: &mut Mlp| &mut m.layers[l].bias[i]);
        }
    }
    worst
}

/// Draws a random PCA instance of at most 6x6 and returns its shape and the
/// worst gap to the covariance eigen-decomposition oracle, over components
/// (up to sign) and explained-variance ratios.
pub fn pca_oracle_gap(rng: &mut SeededRng) -> (usize, usize, f64) {
    let n = 3 + rng.below(4) as usize;
    let p = 2 + rng.below(5) as usize;
    let k = (n - 1).min(p);
    let m = Matrix::from_fn(n, p, |_, j| rng.normal() * (1.0 + j as f64) + 3.0);
    let fit = fit_pca(&Dataset::with_default_labels("x", m.clone()).unwrap(), k).unwrap();
    let FunctionBody::PcaProject { components, .. } = &fit.project.body else {
        panic!("PCA projection expected");
    };
    let (values, vectors) = symmetric_eigen(&covariance(&m));
    let total: f64 = values.iter().map(|v| v.max(0.0)).sum();
    let mut worst: f64 = 0.0;
    for i in 0..k {
        let oracle = vectors.column(i);
        let got = components.row(i);
        let same = got.iter().zip(&oracle).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let flipped = got.iter().zip(&oracle).map(|(a, b)| (a + b).abs()).fold(0.0, f64::max);
        worst = worst.max(same.min(flipped));
        worst = worst.max((fit.explained_variance_ratio[i] - values[i] / total).abs());
    }
    (n, p, worst)
}
