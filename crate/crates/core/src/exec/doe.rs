//! Synthetic design-of-experiments data standing in for FEM simulations.
//!
//! Each sample draws `intrinsic_dim` latent factors uniformly in `[-1, 1)`.
//! Displacements are a random linear mixing of the latents; strains are a
//! random linear mixing of the componentwise cubic `g(z) = z + z³`. Both
//! therefore live on `intrinsic_dim`-dimensional manifolds inside much
//! larger ambient spaces (exactly linear subspaces when noise is zero).

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::rng::SeededRng;
use crate::numerics::{Dataset, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoeSpec {
    pub n_samples: usize,
    pub displ_dim: usize,
    pub eps_dim: usize,
    pub intrinsic_dim: usize,
    /// Standard deviation of additive Gaussian noise.
    pub noise: f64,
    pub seed: u64,
}

impl Default for DoeSpec {
    fn default() -> Self {
        Self {
            n_samples: 200,
            displ_dim: 1200,
            eps_dim: 1500,
            intrinsic_dim: 10,
            noise: 0.0,
            seed: 7,
        }
    }
}

#[derive(Debug, Error)]
pub enum DoeError {
    #[error("invalid generator parameters: {0}")]
    Invalid(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl DoeSpec {
    pub fn validate(&self) -> Result<(), DoeError> {
        let bad = |m: String| Err(DoeError::Invalid(m));
        if self.n_samples < 2 {
            return bad(format!(
                "n_samples must be at least 2 (standardization needs two samples), got {}",
                self.n_samples
            ));
        }
        if self.intrinsic_dim == 0 {
            return bad("intrinsic_dim must be at least 1".into());
        }
        if self.displ_dim < self.intrinsic_dim || self.eps_dim < self.intrinsic_dim {
            return bad(format!(
                "ambient dims ({}, {}) must be at least the intrinsic dim {}",
                self.displ_dim, self.eps_dim, self.intrinsic_dim
            ));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return bad(format!("noise must be finite and non-negative, got {}", self.noise));
        }
        Ok(())
    }
}

/// Componentwise strain nonlinearity.
pub fn strain_response(z: f64) -> f64 {
    z + z * z * z
}

/// Draws `(displ, eps)`.
///
/// Draw order from one seeded stream: latents (row-major), displacement
/// mixing, strain mixing, then displacement noise and strain noise when
/// `noise > 0`. Mixing entries are standard normal divided by
/// `sqrt(intrinsic_dim)`.
pub fn generate_datasets(spec: &DoeSpec) -> Result<(Dataset, Dataset), DoeError> {
    spec.validate()?;
    let mut rng = SeededRng::new(spec.seed);
    let r = spec.intrinsic_dim;
    let latent = Matrix::from_fn(spec.n_samples, r, |_, _| rng.uniform_range(-1.0, 1.0));
    let scale = 1.0 / (r as f64).sqrt();
    let mix_displ = Matrix::from_fn(r, spec.displ_dim, |_, _| rng.normal() * scale);
    let mix_eps = Matrix::from_fn(r, spec.eps_dim, |_, _| rng.normal() * scale);

    let mut displ = latent.matmul(&mix_displ);
    let response = Matrix::from_fn(spec.n_samples, r, |i, j| strain_response(latent[(i, j)]));
    let mut eps = response.matmul(&mix_eps);
    if spec.noise > 0.0 {
        for m in [&mut displ, &mut eps] {
            for v in m.as_mut_slice() {
                *v += spec.noise * rng.normal();
            }
        }
    }
    let displ = Dataset::with_default_labels("displ", displ).map_err(|e| DoeError::Invalid(e.to_string()))?;
    let eps = Dataset::with_default_labels("eps", eps).map_err(|e| DoeError::Invalid(e.to_string()))?;
    Ok((displ, eps))
}

/// Paths written by [`generate_doe_dataset`].
#[derive(Debug, Clone)]
pub struct DoeFiles {
    pub displ: PathBuf,
    pub eps: PathBuf,
    pub params: PathBuf,
}

/// Writes `displ.csv`, `eps.csv` and the generator parameters (`doe.json`)
/// into `out_dir`.
pub fn generate_doe_dataset(spec: &DoeSpec, out_dir: &Path) -> Result<DoeFiles, DoeError> {
    let (displ, eps) = generate_datasets(spec)?;
    fs::create_dir_all(out_dir)?;
    let files = DoeFiles {
        displ: out_dir.join("displ.csv"),
        eps: out_dir.join("eps.csv"),
        params: out_dir.join("doe.json"),
    };
    fs::write(&files.displ, displ.to_csv_bytes())?;
    fs::write(&files.eps, eps.to_csv_bytes())?;
    let mut params = serde_json::to_string_pretty(spec).expect("spec serializes");
    params.push('\n');
    fs::write(&files.params, params)?;
    Ok(files)
}
