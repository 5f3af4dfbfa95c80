//! Function artifacts: save a fitted function, reload it with checksum
//! verification, and show that a corrupted copy is rejected.
//!
//! ```bash
//! cargo run -p fdf --example export_reload
//! ```

use fdf::numerics::{apply, fit_standardizer, load_function, save_function, sha256_hex, Matrix};
use fdf::Dataset;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = Dataset::with_default_labels(
        "x",
        Matrix::from_fn(6, 3, |i, j| (i * 3 + j) as f64 * 0.5 + (j as f64).powi(2)),
    )?;
    let (encode, _decode) = fit_standardizer(&data)?;

    let bytes = save_function(&encode);
    let text = String::from_utf8_lossy(&bytes);
    for line in text.lines().take(4) {
        println!("{line}");
    }
    println!("... ({} bytes, file sha256 {})", bytes.len(), &sha256_hex(&bytes)[..16]);

    let reloaded = load_function(&bytes)?;
    let same = apply(&encode, &data)?.matrix() == apply(&reloaded, &data)?.matrix();
    println!("reloaded function reproduces outputs: {same}");

    let mut tampered = bytes.clone();
    let at = tampered.len() - 10;
    tampered[at] ^= 0x01;
    match load_function(&tampered) {
        Ok(_) => println!("tampered artifact loaded (unexpected)"),
        Err(e) => println!("tampered artifact rejected: {e}"),
    }
    Ok(())
}
