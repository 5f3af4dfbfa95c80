//! Fully-connected networks trained by plain gradient descent on mean
//! squared error.
//!
//! Hidden layers use the configured activation; the output layer is linear.
//! Training is single-threaded and performs its floating point operations in
//! a fixed order, so a given `(x, y, config)` always yields the same bits.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::function::{FunctionBody, FunctionValue};
use super::matrix::dot;
use super::rng::SeededRng;
use super::{Dataset, Matrix, NumericsError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Tanh,
    Relu,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Relu => z.max(0.0),
        }
    }

    /// Derivative expressed through the activation output `a = act(z)`.
    fn derivative(self, a: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - a * a,
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

impl FromStr for Activation {
    type Err = NumericsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tanh" => Ok(Activation::Tanh),
            "relu" => Ok(Activation::Relu),
            other => Err(NumericsError::InvalidConfig(format!(
                "unknown activation {other:?} (expected tanh or relu)"
            ))),
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Activation::Tanh => "tanh",
            Activation::Relu => "relu",
        })
    }
}

/// One affine layer: `weights` is outputs × inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

impl Layer {
    fn zeros_like(&self) -> Layer {
        Layer {
            weights: Matrix::zeros(self.weights.rows(), self.weights.cols()),
            bias: vec![0.0; self.bias.len()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<Layer>,
    pub activation: Activation,
}

impl Mlp {
    /// Xavier-uniform weights (`U(-l, l)`, `l = sqrt(6 / (fan_in + fan_out))`)
    /// drawn layer by layer in row-major order; zero biases.
    pub fn init(widths: &[usize], activation: Activation, rng: &mut SeededRng) -> Self {
        assert!(widths.len() >= 2, "need input and output widths");
        let layers = widths
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                Layer {
                    weights: Matrix::from_fn(fan_out, fan_in, |_, _| rng.uniform_range(-limit, limit)),
                    bias: vec![0.0; fan_out],
                }
            })
            .collect();
        Self { layers, activation }
    }

    pub(crate) fn dims(&self) -> Result<(usize, usize), NumericsError> {
        let (first, last) = match (self.layers.first(), self.layers.last()) {
            (Some(f), Some(l)) => (f, l),
            _ => return Err(NumericsError::InvalidFunction("mlp has no layers".into())),
        };
        for l in &self.layers {
            if l.weights.rows() != l.bias.len() {
                return Err(NumericsError::InvalidFunction(
                    "mlp bias length differs from layer width".into(),
                ));
            }
        }
        for pair in self.layers.windows(2) {
            if pair[0].weights.rows() != pair[1].weights.cols() {
                return Err(NumericsError::DimensionMismatch {
                    expected: pair[0].weights.rows(),
                    found: pair[1].weights.cols(),
                });
            }
        }
        Ok((first.weights.cols(), last.weights.rows()))
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let last = self.layers.len() - 1;
        let mut a = x.to_vec();
        for (li, layer) in self.layers.iter().enumerate() {
            a = layer
                .weights
                .row_iter()
                .zip(&layer.bias)
                .map(|(w, b)| {
                    let z = dot(w, &a) + b;
                    if li == last {
                        z
                    } else {
                        self.activation.apply(z)
                    }
                })
                .collect();
        }
        a
    }

    /// Mean squared error over the selected rows (averaged over samples and
    /// outputs).
    pub fn loss(&self, x: &Matrix, y: &Matrix, rows: &[usize]) -> f64 {
        let mut total = 0.0;
        for &i in rows {
            let out = self.forward(x.row(i));
            total += out.iter().zip(y.row(i)).map(|(p, t)| (p - t) * (p - t)).sum::<f64>();
        }
        total / (rows.len() * y.cols()) as f64
    }

    /// Loss over the selected rows and its gradient with respect to every
    /// weight and bias, by backpropagation.
    pub fn loss_and_gradient(&self, x: &Matrix, y: &Matrix, rows: &[usize]) -> (f64, Vec<Layer>) {
        let mut grads: Vec<Layer> = self.layers.iter().map(Layer::zeros_like).collect();
        let norm = 1.0 / (rows.len() * y.cols()) as f64;
        let last = self.layers.len() - 1;
        let mut total = 0.0;
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len() + 1);

        for &i in rows {
            acts.clear();
            acts.push(x.row(i).to_vec());
            for (li, layer) in self.layers.iter().enumerate() {
                let input = &acts[li];
                let next: Vec<f64> = layer
                    .weights
                    .row_iter()
                    .zip(&layer.bias)
                    .map(|(w, b)| {
                        let z = dot(w, input) + b;
                        if li == last {
                            z
                        } else {
                            self.activation.apply(z)
                        }
                    })
                    .collect();
                acts.push(next);
            }

            let out = &acts[last + 1];
            let mut delta: Vec<f64> = out
                .iter()
                .zip(y.row(i))
                .map(|(p, t)| {
                    total += (p - t) * (p - t);
                    2.0 * (p - t) * norm
                })
                .collect();

            for li in (0..=last).rev() {
                let input = &acts[li];
                let g = &mut grads[li];
                for (o, d) in delta.iter().enumerate() {
                    g.bias[o] += d;
                    for (gw, a) in g.weights.row_mut(o).iter_mut().zip(input) {
                        *gw += d * a;
                    }
                }
                if li > 0 {
                    let back = self.layers[li].weights.tr_mul_vec(&delta);
                    delta = back
                        .into_iter()
                        .zip(input)
                        .map(|(b, &a)| b * self.activation.derivative(a))
                        .collect();
                }
            }
        }
        (total * norm, grads)
    }

    fn step(&mut self, grads: &[Layer], lr: f64) {
        for (layer, g) in self.layers.iter_mut().zip(grads) {
            for (w, gw) in layer.weights.as_mut_slice().iter_mut().zip(g.weights.as_slice()) {
                *w -= lr * gw;
            }
            for (b, gb) in layer.bias.iter_mut().zip(&g.bias) {
                *b -= lr * gb;
            }
        }
    }

    /// Flattened parameters (layer by layer: weights row-major, then bias).
    pub fn parameters(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.extend_from_slice(l.weights.as_slice());
            out.extend_from_slice(&l.bias);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Batch {
    Full,
    Size(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub hidden_layers: Vec<usize>,
    pub activation: Activation,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch: Batch,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden_layers: vec![32],
            activation: Activation::Tanh,
            learning_rate: 0.05,
            epochs: 2000,
            batch: Batch::Full,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), NumericsError> {
        let bad = |m: &str| Err(NumericsError::InvalidConfig(m.to_string()));
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive and finite");
        }
        if self.hidden_layers.contains(&0) {
            return bad("hidden layer widths must be at least 1");
        }
        if self.batch == Batch::Size(0) {
            return bad("batch size must be at least 1");
        }
        Ok(())
    }
}

/// Trains a network mapping rows of `x` to rows of `y`.
///
/// Returns the model and one loss entry per epoch: the sample-weighted mean
/// of the batch losses seen during that epoch, each measured before its
/// update (for full-batch descent, the loss at the start of the epoch).
/// Mini-batches are drawn from a fresh shuffle every epoch.
pub fn train_mlp(x: &Dataset, y: &Dataset, cfg: &TrainConfig) -> Result<(FunctionValue, Vec<f64>), NumericsError> {
    cfg.validate()?;
    if x.n_samples() != y.n_samples() {
        return Err(NumericsError::SampleMismatch {
            x: x.n_samples(),
            y: y.n_samples(),
        });
    }
    if x.n_features() == 0 || y.n_features() == 0 {
        return Err(NumericsError::InvalidDataset(
            "inputs and targets need at least one feature".into(),
        ));
    }

    let mut widths = vec![x.n_features()];
    widths.extend(&cfg.hidden_layers);
    widths.push(y.n_features());

    let mut rng = SeededRng::new(cfg.seed);
    let mut mlp = Mlp::init(&widths, cfg.activation, &mut rng);

    let n = x.n_samples();
    let batch = match cfg.batch {
        Batch::Full => n,
        Batch::Size(b) => b.min(n),
    };
    let mut order: Vec<usize> = (0..n).collect();
    let mut history = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        if batch < n {
            rng.shuffle(&mut order);
        }
        let mut weighted = 0.0;
        for rows in order.chunks(batch) {
            let (loss, grads) = mlp.loss_and_gradient(x.matrix(), y.matrix(), rows);
            if !loss.is_finite() {
                return Err(NumericsError::Diverged { epoch, loss });
            }
            weighted += loss * rows.len() as f64;
            mlp.step(&grads, cfg.learning_rate);
        }
        history.push(weighted / n as f64);
    }

    if !mlp.parameters().iter().all(|p| p.is_finite()) {
        return Err(NumericsError::Diverged {
            epoch: cfg.epochs,
            loss: f64::NAN,
        });
    }

    let model = FunctionValue::new(FunctionBody::Mlp(mlp))?.with_types(x.tag.clone(), y.tag.clone());
    Ok((model, history))
}
