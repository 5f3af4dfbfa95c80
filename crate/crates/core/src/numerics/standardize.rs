use super::function::{FunctionBody, FunctionValue};
use super::{Dataset, NumericsError};

/// Smallest scale used for a feature; constant columns encode to zero.
pub const STD_FLOOR: f64 = 1e-12;

/// Per-feature mean and population standard deviation.
pub fn feature_stats(data: &Dataset) -> (Vec<f64>, Vec<f64>) {
    let n = data.n_samples() as f64;
    let p = data.n_features();
    let mut mean = vec![0.0; p];
    for row in data.matrix().row_iter() {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    let mut var = vec![0.0; p];
    for row in data.matrix().row_iter() {
        for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
            let d = v - m;
            *s += d * d;
        }
    }
    let std = var.into_iter().map(|s| (s / n).sqrt()).collect();
    (mean, std)
}

/// Learns `(encode, decode)`: encode subtracts the per-feature mean and
/// divides by the population standard deviation (floored at [`STD_FLOOR`]);
/// decode inverts it.
pub fn fit_standardizer(data: &Dataset) -> Result<(FunctionValue, FunctionValue), NumericsError> {
    if data.n_samples() < 2 {
        return Err(NumericsError::TooFewSamples {
            needed: 2,
            found: data.n_samples(),
        });
    }
    let (mean, std) = feature_stats(data);
    let scale: Vec<f64> = std.into_iter().map(|s| s.max(STD_FLOOR)).collect();
    let encode = FunctionValue::new(FunctionBody::Standardize {
        mean: mean.clone(),
        scale: scale.clone(),
    })?;
    let decode = FunctionValue::new(FunctionBody::Destandardize { mean, scale })?;
    let tag = data.tag.clone();
    Ok((encode.with_types(tag.clone(), None), decode.with_types(None, tag)))
}
