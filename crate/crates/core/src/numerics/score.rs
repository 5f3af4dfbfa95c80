use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{Dataset, NumericsError};

/// Actual and predicted vectors for one sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScorePair {
    pub actual: Vec<f64>,
    pub predicted: Vec<f64>,
}

/// Goodness of fit of predictions against ground truth.
///
/// An output whose ground truth is constant has no variance to explain:
/// its R² is 1 when predicted exactly, and `-inf` otherwise. `-inf` is
/// written as the string `"-inf"` in JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    #[serde(with = "flagged_vec")]
    pub r2: Vec<f64>,
    #[serde(with = "flagged")]
    pub r2_mean: f64,
    pub rmse: Vec<f64>,
    pub n_samples: usize,
    pub pairs: Vec<ScorePair>,
}

pub fn score(actual: &Dataset, predicted: &Dataset) -> Result<ScoreReport, NumericsError> {
    let (a, p) = (actual.matrix(), predicted.matrix());
    if a.shape() != p.shape() {
        return Err(NumericsError::ShapeMismatch {
            left: a.shape(),
            right: p.shape(),
        });
    }
    let (n, d) = a.shape();
    let mut r2 = Vec::with_capacity(d);
    let mut rmse = Vec::with_capacity(d);
    for j in 0..d {
        let mean = (0..n).map(|i| a[(i, j)]).sum::<f64>() / n as f64;
        let mut ss_tot = 0.0;
        let mut ss_res = 0.0;
        for i in 0..n {
            ss_tot += (a[(i, j)] - mean).powi(2);
            ss_res += (a[(i, j)] - p[(i, j)]).powi(2);
        }
        r2.push(if ss_tot > 0.0 {
            1.0 - ss_res / ss_tot
        } else if ss_res == 0.0 {
            1.0
        } else {
            f64::NEG_INFINITY
        });
        rmse.push((ss_res / n as f64).sqrt());
    }
    let r2_mean = if d == 0 { 1.0 } else { r2.iter().sum::<f64>() / d as f64 };
    let pairs = (0..n)
        .map(|i| ScorePair {
            actual: a.row(i).to_vec(),
            predicted: p.row(i).to_vec(),
        })
        .collect();
    Ok(ScoreReport {
        r2,
        r2_mean,
        rmse,
        n_samples: n,
        pairs,
    })
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum Flag {
    Num(f64),
    Text(String),
}

fn to_flag(v: f64) -> Flag {
    if v.is_finite() {
        Flag::Num(v)
    } else if v == f64::NEG_INFINITY {
        Flag::Text("-inf".into())
    } else {
        Flag::Text(v.to_string())
    }
}

fn from_flag<E: serde::de::Error>(f: Flag) -> Result<f64, E> {
    match f {
        Flag::Num(v) => Ok(v),
        Flag::Text(s) if s == "-inf" => Ok(f64::NEG_INFINITY),
        Flag::Text(s) => Err(E::custom(format!("unexpected score value {s:?}"))),
    }
}

pub(crate) mod flagged {
    use super::*;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        to_flag(*v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        from_flag(Flag::deserialize(d)?)
    }
}

pub(crate) mod flagged_vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|x| to_flag(*x)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Vec::<Flag>::deserialize(d)?.into_iter().map(from_flag).collect()
    }
}
