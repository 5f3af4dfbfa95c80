//! First-class function values: what function edges carry and what export
//! boxes write out.

use serde::{Deserialize, Serialize};

use super::matrix::dot;
use super::mlp::Mlp;
use super::{Dataset, Matrix, NumericsError};
use crate::typing::TypeTag;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum FunctionBody {
    /// `(x - mean) / scale`
    Standardize {
        mean: Vec<f64>,
        scale: Vec<f64>,
    },
    /// `y * scale + mean`
    Destandardize {
        mean: Vec<f64>,
        scale: Vec<f64>,
    },
    /// `components * (x - center)`; components is k × p with orthonormal rows.
    PcaProject {
        components: Matrix,
        center: Vec<f64>,
    },
    /// `componentsᵀ * z + center`
    PcaBackproject {
        components: Matrix,
        center: Vec<f64>,
    },
    Composed {
        children: Vec<FunctionValue>,
    },
    Mlp(Mlp),
}

impl FunctionBody {
    pub fn kind_name(&self) -> &'static str {
        match self {
            FunctionBody::Standardize { .. } => "standardize",
            FunctionBody::Destandardize { .. } => "destandardize",
            FunctionBody::PcaProject { .. } => "pca_project",
            FunctionBody::PcaBackproject { .. } => "pca_backproject",
            FunctionBody::Composed { .. } => "composed",
            FunctionBody::Mlp(_) => "mlp",
        }
    }

    fn dims(&self) -> Result<(usize, usize), NumericsError> {
        let invalid = |m: &str| Err(NumericsError::InvalidFunction(m.to_string()));
        match self {
            FunctionBody::Standardize { mean, scale } | FunctionBody::Destandardize { mean, scale } => {
                if mean.len() != scale.len() {
                    return invalid("mean and scale lengths differ");
                }
                Ok((mean.len(), mean.len()))
            }
            FunctionBody::PcaProject { components, center } => {
                if components.cols() != center.len() {
                    return invalid("component width differs from center length");
                }
                Ok((components.cols(), components.rows()))
            }
            FunctionBody::PcaBackproject { components, center } => {
                if components.cols() != center.len() {
                    return invalid("component width differs from center length");
                }
                Ok((components.rows(), components.cols()))
            }
            FunctionBody::Composed { children } => {
                let (first, last) = match (children.first(), children.last()) {
                    (Some(f), Some(l)) => (f, l),
                    _ => return Err(NumericsError::EmptyComposition),
                };
                for pair in children.windows(2) {
                    if pair[0].signature.output_dim != pair[1].signature.input_dim {
                        return Err(NumericsError::DimensionMismatch {
                            expected: pair[0].signature.output_dim,
                            found: pair[1].signature.input_dim,
                        });
                    }
                }
                Ok((first.signature.input_dim, last.signature.output_dim))
            }
            FunctionBody::Mlp(mlp) => mlp.dims(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FnSignature {
    pub input: Option<TypeTag>,
    pub output: Option<TypeTag>,
    pub input_dim: usize,
    pub output_dim: usize,
}

/// Which box and run produced a function, and the port it left through.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub box_id: String,
    pub port: String,
    pub run_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionValue {
    pub body: FunctionBody,
    pub signature: FnSignature,
    pub provenance: Provenance,
}

impl FunctionValue {
    /// Wraps a body, deriving dimensions from it. Untyped, no provenance.
    pub fn new(body: FunctionBody) -> Result<Self, NumericsError> {
        let (input_dim, output_dim) = body.dims()?;
        Ok(Self {
            body,
            signature: FnSignature {
                input: None,
                output: None,
                input_dim,
                output_dim,
            },
            provenance: Provenance::default(),
        })
    }

    /// Identity on `dim`-vectors, expressed as a unit standardization.
    pub fn identity(dim: usize) -> Self {
        Self::new(FunctionBody::Standardize {
            mean: vec![0.0; dim],
            scale: vec![1.0; dim],
        })
        .expect("identity is well-formed")
    }

    pub fn kind_name(&self) -> &'static str {
        self.body.kind_name()
    }

    /// Name used for output feature labels: the producing port if known.
    pub fn name(&self) -> &str {
        if self.provenance.port.is_empty() {
            self.kind_name()
        } else {
            &self.provenance.port
        }
    }

    pub fn input_dim(&self) -> usize {
        self.signature.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.signature.output_dim
    }

    pub fn with_types(mut self, input: Option<TypeTag>, output: Option<TypeTag>) -> Self {
        self.signature.input = input;
        self.signature.output = output;
        self
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    /// Checks that the stored signature agrees with the body, recursively.
    pub fn check(&self) -> Result<(), NumericsError> {
        if let FunctionBody::Composed { children } = &self.body {
            for c in children {
                c.check()?;
            }
        }
        let dims = self.body.dims()?;
        if dims != (self.signature.input_dim, self.signature.output_dim) {
            return Err(NumericsError::InvalidFunction(format!(
                "signature dims {:?} disagree with body dims {dims:?}",
                (self.signature.input_dim, self.signature.output_dim)
            )));
        }
        Ok(())
    }

    /// Applies the function to one input vector.
    ///
    /// Panics if `x.len()` differs from the input dimension; use [`apply`]
    /// for checked application to datasets.
    pub fn apply_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.input_dim(), "function input dimension");
        match &self.body {
            FunctionBody::Standardize { mean, scale } => {
                x.iter().zip(mean).zip(scale).map(|((v, m), s)| (v - m) / s).collect()
            }
            FunctionBody::Destandardize { mean, scale } => {
                x.iter().zip(mean).zip(scale).map(|((v, m), s)| v * s + m).collect()
            }
            FunctionBody::PcaProject { components, center } => {
                let centered: Vec<f64> = x.iter().zip(center).map(|(v, c)| v - c).collect();
                components.row_iter().map(|r| dot(r, &centered)).collect()
            }
            FunctionBody::PcaBackproject { components, center } => {
                let mut out = components.tr_mul_vec(x);
                for (o, c) in out.iter_mut().zip(center) {
                    *o += c;
                }
                out
            }
            FunctionBody::Composed { children } => children.iter().fold(x.to_vec(), |acc, child| child.apply_vec(&acc)),
            FunctionBody::Mlp(mlp) => mlp.forward(x),
        }
    }
}

/// Chains functions left to right: `compose([f, g])(x) = g(f(x))`.
///
/// The result's input type is the first child's, its output type the last
/// child's.
pub fn compose(fs: Vec<FunctionValue>) -> Result<FunctionValue, NumericsError> {
    let input = fs.first().and_then(|f| f.signature.input.clone());
    let output = fs.last().and_then(|f| f.signature.output.clone());
    Ok(FunctionValue::new(FunctionBody::Composed { children: fs })?.with_types(input, output))
}

/// Row-wise application. Output columns are labeled `<fname>_0..` and the
/// output carries the function's output type.
pub fn apply(f: &FunctionValue, data: &Dataset) -> Result<Dataset, NumericsError> {
    if data.n_features() != f.input_dim() {
        return Err(NumericsError::DimensionMismatch {
            expected: f.input_dim(),
            found: data.n_features(),
        });
    }
    let mut out = Vec::with_capacity(data.n_samples() * f.output_dim());
    for row in data.matrix().row_iter() {
        out.extend(f.apply_vec(row));
    }
    let rows = Matrix::from_vec(data.n_samples(), f.output_dim(), out);
    let features = (0..f.output_dim()).map(|j| format!("{}_{j}", f.name())).collect();
    Ok(Dataset::new(f.name().to_string(), features, rows)?.with_tag(f.signature.output.clone()))
}
