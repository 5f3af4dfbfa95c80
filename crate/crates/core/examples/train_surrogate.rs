//! Supervised training: fit an MLP to a smooth nonlinear map, then score the
//! predictions with per-output R^2.
//!
//! ```bash
//! cargo run --release -p fdf --example train_surrogate
//! ```

use fdf::numerics::rng::SeededRng;
use fdf::numerics::{apply, score, train_mlp, Activation, Batch, Matrix};
use fdf::{Dataset, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = SeededRng::new(3);
    let x = Matrix::from_fn(256, 2, |_, _| rng.uniform_range(-1.0, 1.0));
    let y = Matrix::from_fn(256, 2, |i, j| {
        let (a, b) = (x.row(i)[0], x.row(i)[1]);
        if j == 0 {
            a + a * a * a
        } else {
            (a * b).sin()
        }
    });
    let x = Dataset::with_default_labels("x", x)?;
    let y = Dataset::with_default_labels("y", y)?;

    let cfg = TrainConfig {
        hidden_layers: vec![16, 16],
        activation: Activation::Tanh,
        learning_rate: 0.05,
        epochs: 1500,
        batch: Batch::Full,
        seed: 11,
    };
    let (model, losses) = train_mlp(&x, &y, &cfg)?;
    println!(
        "trained {} ({} -> {})",
        model.kind_name(),
        model.input_dim(),
        model.output_dim()
    );
    for epoch in [0, losses.len() / 4, losses.len() / 2, losses.len() - 1] {
        println!("  epoch {epoch:>5}: mse {:.4e}", losses[epoch]);
    }

    let report = score(&y, &apply(&model, &x)?)?;
    for (j, r2) in report.r2.iter().enumerate() {
        println!("output {j}: r2 {r2:.6}, rmse {:.4e}", report.rmse[j]);
    }
    println!("mean r2 {:.6}", report.r2_mean);
    Ok(())
}
