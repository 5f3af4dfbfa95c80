//! The built-in library of learnable and predefined functions.
//!
//! Everything here is a pure function of its inputs (plus a seed where
//! randomness is involved) and runs single-threaded.

mod artifact;
mod dataset;
mod error;
mod function;
mod matrix;
pub mod mlp;
mod pca;
pub mod rng;
mod score;
mod standardize;
pub mod svd;

pub use artifact::{load_function, save_function, sha256_hex, ArtifactError};
pub use dataset::Dataset;
pub use error::NumericsError;
pub use function::{apply, compose, FnSignature, FunctionBody, FunctionValue, Provenance};
pub use matrix::{dot, norm, Matrix};
pub use mlp::{train_mlp, Activation, Batch, Layer, Mlp, TrainConfig};
pub use pca::{fit_pca, PcaFit};
pub use score::{score, ScorePair, ScoreReport};
pub use standardize::{feature_stats, fit_standardizer, STD_FLOOR};

pub(crate) mod score_serde {
    pub(crate) use super::score::{flagged, flagged_vec};
}
