mod common;

use common::*;
use fdf::exec::{generate_datasets, DoeSpec};
use fdf::numerics::mlp::{Activation, Batch};
use fdf::numerics::rng::SeededRng;
use fdf::numerics::{
    apply, fit_pca, fit_standardizer, load_function, save_function, score, train_mlp, ArtifactError, Dataset,
    FunctionBody, FunctionValue, Matrix, TrainConfig,
};
use proptest::prelude::*;

fn dataset(m: Matrix) -> Dataset {
    Dataset::with_default_labels("x", m).unwrap()
}

fn components(f: &FunctionValue) -> Matrix {
    match &f.body {
        FunctionBody::PcaProject { components, .. } => components.clone(),
        other => panic!("not a projection: {}", other.kind_name()),
    }
}

#[test]
fn standardizer_roundtrip_50x8() {
    let mut rng = SeededRng::new(11);
    let m = Matrix::from_fn(50, 8, |_, j| rng.normal() * (j as f64 + 1.0) * 10.0 + j as f64 * 100.0);
    let d = dataset(m.clone());
    let (enc, dec) = fit_standardizer(&d).unwrap();
    let z = apply(&enc, &d).unwrap();
    let back = apply(&dec, &z).unwrap();
    assert!(back.matrix().max_abs_diff(&m) <= 1e-10);
    for j in 0..8 {
        let col = z.matrix().column(j);
        let mean = col.iter().sum::<f64>() / 50.0;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 50.0;
        assert!(
            mean.abs() < 1e-12 && (var - 1.0).abs() < 1e-12,
            "feature {j}: {mean} {var}"
        );
    }
}

#[test]
fn pca_components_orthonormal_and_decorrelating() {
    let mut rng = SeededRng::new(3);
    let latent = random_matrix(&mut rng, 80, 4, 1.0);
    let mix = random_matrix(&mut rng, 4, 12, 1.0);
    let noise = random_matrix(&mut rng, 80, 12, 0.05);
    let mut m = latent.matmul(&mix);
    for (v, e) in m.as_mut_slice().iter_mut().zip(noise.as_slice()) {
        *v += e;
    }
    let d = dataset(m);
    let fit = fit_pca(&d, 6).unwrap();
    let c = components(&fit.project);
    let gram = c.matmul(&c.transpose());
    assert!(gram.max_abs_diff(&Matrix::identity(6)) <= 1e-9);

    let scores = apply(&fit.project, &d).unwrap();
    let cov = covariance(scores.matrix());
    let top = cov[(0, 0)];
    for i in 0..6 {
        for j in 0..6 {
            if i != j {
                assert!(cov[(i, j)].abs() / top <= 1e-8, "cov[{i},{j}] = {}", cov[(i, j)]);
            }
        }
    }
}

#[test]
fn pca_matches_covariance_eigendecomposition() {
    let mut rng = SeededRng::new(2024);
    for case in 0..50 {
        let (n, p, gap) = pca_oracle_gap(&mut rng);
        assert!(gap <= 1e-8, "case {case} ({n}x{p}): {gap}");
    }
}

fn reconstruction_error(m: &Matrix, basis: &Matrix) -> f64 {
    let mean: Vec<f64> = (0..m.cols())
        .map(|j| m.column(j).iter().sum::<f64>() / m.rows() as f64)
        .collect();
    let mut err = 0.0;
    for row in m.row_iter() {
        let x: Vec<f64> = row.iter().zip(&mean).map(|(v, c)| v - c).collect();
        let z = basis.mul_vec(&x);
        let back = basis.tr_mul_vec(&z);
        err += x.iter().zip(&back).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    }
    err
}

fn random_orthonormal(rng: &mut SeededRng, k: usize, p: usize) -> Matrix {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    while rows.len() < k {
        let mut v: Vec<f64> = (0..p).map(|_| rng.normal()).collect();
        for r in &rows {
            let d: f64 = v.iter().zip(r).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(r).for_each(|(a, b)| *a -= d * b);
        }
        let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if n > 1e-6 {
            rows.push(v.into_iter().map(|a| a / n).collect());
        }
    }
    Matrix::from_fn(k, p, |i, j| rows[i][j])
}

#[test]
fn pca_beats_random_subspaces() {
    let mut rng = SeededRng::new(99);
    for _ in 0..5 {
        let m = Matrix::from_fn(6, 4, |_, j| rng.normal() * (4.0 - j as f64));
        let fit = fit_pca(&dataset(m.clone()), 2).unwrap();
        let best = reconstruction_error(&m, &components(&fit.project));
        for _ in 0..1000 {
            let basis = random_orthonormal(&mut rng, 2, 4);
            assert!(best <= reconstruction_error(&m, &basis) + 1e-12);
        }
    }
}

#[test]
fn pca_reduces_doe_displacements() {
    let (displ, _) = generate_datasets(&DoeSpec::default()).unwrap();
    let fit = fit_pca(&displ, 10).unwrap();
    let total: f64 = fit.explained_variance_ratio.iter().sum();
    assert!(total >= 0.999, "explained {total}");
    let back = apply(&fit.backproject, &apply(&fit.project, &displ).unwrap()).unwrap();
    let rel = back.matrix().max_abs_diff(displ.matrix()) / displ.matrix().frobenius_norm();
    assert!(rel <= 1e-6, "relative reconstruction error {rel}");
}

#[test]
fn mlp_gradients_match_finite_differences() {
    for seed in 0..20 {
        let act = if seed % 4 == 3 {
            Activation::Relu
        } else {
            Activation::Tanh
        };
        let worst = finite_difference_check(seed, act);
        assert!(worst <= 1e-4, "network {seed} ({act}): relative error {worst}");
    }
}

fn identity_task() -> (Dataset, TrainConfig) {
    let mut rng = SeededRng::new(5);
    let x = dataset(Matrix::from_fn(64, 1, |_, _| rng.uniform_range(-1.0, 1.0)));
    let cfg = TrainConfig {
        hidden_layers: vec![8],
        activation: Activation::Tanh,
        learning_rate: 0.05,
        epochs: 500,
        batch: Batch::Full,
        seed: 7,
    };
    (x, cfg)
}

/// Reference run of this configuration: 3.163e-4.
const IDENTITY_MSE: f64 = 1e-3;

#[test]
fn mlp_learns_identity() {
    let (x, cfg) = identity_task();
    let (model, history) = train_mlp(&x, &x, &cfg).unwrap();
    assert_eq!(history.len(), 500);
    assert!(history[499] < history[0]);
    let pred = apply(&model, &x).unwrap();
    let mse = pred
        .matrix()
        .as_slice()
        .iter()
        .zip(x.matrix().as_slice())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / 64.0;
    assert!(mse <= IDENTITY_MSE, "mse {mse}");
}

#[test]
fn mlp_training_is_bit_deterministic() {
    let (x, mut cfg) = identity_task();
    cfg.batch = Batch::Size(16);
    cfg.epochs = 50;
    let (a, ha) = train_mlp(&x, &x, &cfg).unwrap();
    let (b, hb) = train_mlp(&x, &x, &cfg).unwrap();
    assert_eq!(save_function(&a), save_function(&b));
    assert_eq!(
        ha.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
        hb.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
    );
}

#[test]
fn score_of_perfect_prediction() {
    let mut rng = SeededRng::new(8);
    let d = dataset(random_matrix(&mut rng, 10, 3, 1.0));
    let r = score(&d, &d).unwrap();
    assert_eq!(r.r2, vec![1.0; 3]);
    assert_eq!(r.rmse, vec![0.0; 3]);
    assert_eq!(r.pairs.len(), 10);
}

#[test]
fn score_is_shift_invariant() {
    let mut rng = SeededRng::new(9);
    let a = random_matrix(&mut rng, 30, 2, 1.0);
    let p = Matrix::from_fn(30, 2, |i, j| a[(i, j)] + 0.3 * rng.normal());
    let base = score(&dataset(a.clone()), &dataset(p.clone())).unwrap();
    let shift = |m: &Matrix| Matrix::from_fn(30, 2, |i, j| m[(i, j)] + 1000.0);
    let shifted = score(&dataset(shift(&a)), &dataset(shift(&p))).unwrap();
    for (x, y) in base.r2.iter().zip(&shifted.r2) {
        assert!((x - y).abs() <= 1e-9);
    }
}

#[test]
fn score_of_constant_actual() {
    let a = dataset(Matrix::from_rows(&[[1.0], [1.0], [1.0]]));
    let p = dataset(Matrix::from_rows(&[[1.0], [2.0], [1.0]]));
    assert_eq!(score(&a, &a).unwrap().r2, vec![1.0]);
    assert_eq!(score(&a, &p).unwrap().r2, vec![f64::NEG_INFINITY]);
}

fn sample_function(seed: u64) -> FunctionValue {
    let mut rng = SeededRng::new(seed);
    let m = random_matrix(&mut rng, 12, 5, 3.0);
    let d = dataset(m);
    let (std, _) = fit_standardizer(&d).unwrap();
    let z = apply(&std, &d).unwrap();
    let pca = fit_pca(&z, 3).unwrap();
    let y = apply(&pca.project, &z).unwrap();
    let cfg = TrainConfig {
        hidden_layers: vec![4],
        epochs: 3,
        seed,
        ..TrainConfig::default()
    };
    let (mlp, _) = train_mlp(&y, &y, &cfg).unwrap();
    fdf::numerics::compose(vec![std, pca.project, mlp]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn artifact_roundtrip_is_identity(seed in any::<u64>()) {
        let f = sample_function(seed);
        let bytes = save_function(&f);
        let back = load_function(&bytes).unwrap();
        prop_assert_eq!(&back, &f);
        prop_assert_eq!(save_function(&back), bytes);
    }

    #[test]
    fn corrupted_artifact_is_rejected(seed in any::<u64>(), pos in any::<prop::sample::Index>(), delta in 1u8..10) {
        let bytes = save_function(&sample_function(seed));
        let header = bytes.iter().enumerate().filter(|(_, &b)| b == b'\n').nth(1).unwrap().0 + 1;
        let mut bad = bytes.clone();
        let i = header + pos.index(bytes.len() - header);
        bad[i] = if bad[i].is_ascii_digit() { b'0' + (bad[i] - b'0' + delta) % 10 } else { bad[i] ^ 0x20 };
        prop_assume!(bad != bytes);
        let rejected = matches!(load_function(&bad), Err(ArtifactError::ChecksumMismatch { .. }) | Err(ArtifactError::Corrupt(_)));
        prop_assert!(rejected);
    }

    #[test]
    fn standardizer_roundtrip_random_shapes(seed in any::<u64>(), n in 2usize..30, p in 1usize..8) {
        let mut rng = SeededRng::new(seed);
        let m = Matrix::from_fn(n, p, |_, _| rng.normal() * 50.0 + 10.0);
        let d = dataset(m.clone());
        let (enc, dec) = fit_standardizer(&d).unwrap();
        let back = apply(&dec, &apply(&enc, &d).unwrap()).unwrap();
        prop_assert!(back.matrix().max_abs_diff(&m) <= 1e-10);
    }
}
