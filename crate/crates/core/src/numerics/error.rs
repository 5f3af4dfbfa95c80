use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("need at least {needed} samples, found {found}")]
    TooFewSamples { needed: usize, found: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("sample count mismatch: {x} inputs vs {y} targets")]
    SampleMismatch { x: usize, y: usize },
    #[error("n_components must be in 1..={max}, found {found}")]
    InvalidComponents { found: usize, max: usize },
    #[error("data has effective rank {rank}, below the {requested} requested components")]
    RankDeficient { rank: usize, requested: usize },
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("training diverged at epoch {epoch}: loss is {loss}")]
    Diverged { epoch: usize, loss: f64 },
    #[error("cannot compose an empty list of functions")]
    EmptyComposition,
    #[error("invalid function: {0}")]
    InvalidFunction(String),
}
