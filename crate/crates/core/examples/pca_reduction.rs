//! Dimensionality reduction on synthetic DoE data: standardize the
//! displacement field, fit PCA, and measure the reconstruction error.
//!
//! ```bash
//! cargo run --release -p fdf --example pca_reduction
//! ```

use fdf::exec::generate_datasets;
use fdf::numerics::{apply, compose, fit_pca, fit_standardizer};
use fdf::DoeSpec;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = DoeSpec {
        displ_dim: 300,
        eps_dim: 400,
        ..DoeSpec::default()
    };
    let (displ, _eps) = generate_datasets(&spec)?;
    println!("displ: {} x {}", displ.n_samples(), displ.n_features());

    let (std_enc, std_dec) = fit_standardizer(&displ)?;
    let z = apply(&std_enc, &displ)?;
    let pca = fit_pca(&z, spec.intrinsic_dim)?;
    let total: f64 = pca.explained_variance_ratio.iter().sum();
    println!("kept {} components, explained variance {total:.9}", spec.intrinsic_dim);
    for (i, s) in pca.singular_values.iter().take(spec.intrinsic_dim + 2).enumerate() {
        println!("  sigma[{i}] = {s:.6e}");
    }

    let encode = compose(vec![std_enc, pca.project])?;
    let decode = compose(vec![pca.backproject, std_dec])?;
    let reduced = apply(&encode, &displ)?;
    let restored = apply(&decode, &reduced)?;

    let (mut err, mut norm) = (0.0, 0.0);
    for (a, b) in displ.matrix().as_slice().iter().zip(restored.matrix().as_slice()) {
        err += (a - b) * (a - b);
        norm += a * a;
    }
    println!("reduced shape: {} x {}", reduced.n_samples(), reduced.n_features());
    println!("relative reconstruction error: {:.3e}", (err / norm).sqrt());
    Ok(())
}
