//! Registry of the built-in box operations.
//!
//! Each entry fixes, for a `(kind, op)` pair, the ordered port slots (their
//! flavor and role) and the accepted parameters. Port *names* are chosen by
//! the pipeline author; only the count and flavor of each slot are checked.

use serde::Serialize;

use crate::graph::{BoxKind, Flavor, ParamValue};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Slot {
    pub role: &'static str,
    pub flavor: Flavor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamType {
    Int,
    Float,
    Bool,
    Text,
}

impl ParamType {
    pub fn accepts(self, value: &ParamValue) -> bool {
        match self {
            ParamType::Int => matches!(value, ParamValue::Int(_)),
            ParamType::Float => matches!(value, ParamValue::Int(_) | ParamValue::Float(_)),
            ParamType::Bool => matches!(value, ParamValue::Bool(_)),
            ParamType::Text => matches!(value, ParamValue::Text(_)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParamSpec {
    pub name: &'static str,
    #[serde(rename = "type")]
    pub ty: ParamType,
    pub required: bool,
    /// Default rendered as text, for display in editors.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub default: Option<&'static str>,
    pub doc: &'static str,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OpSpec {
    pub kind: BoxKind,
    pub op: &'static str,
    pub doc: &'static str,
    pub inputs: &'static [Slot],
    pub outputs: &'static [Slot],
    pub params: &'static [ParamSpec],
}

impl OpSpec {
    pub fn param(&self, name: &str) -> Option<&ParamSpec> {
        self.params.iter().find(|p| p.name == name)
    }
}

const fn data(role: &'static str) -> Slot {
    Slot {
        role,
        flavor: Flavor::Data,
    }
}

const fn function(role: &'static str) -> Slot {
    Slot {
        role,
        flavor: Flavor::Function,
    }
}

const N_COMPONENTS: ParamSpec = ParamSpec {
    name: "n_components",
    ty: ParamType::Int,
    required: true,
    default: None,
    doc: "number of principal components kept",
};

const CODER_OUTPUTS: &[Slot] = &[function("encode"), function("decode")];

static REGISTRY: &[OpSpec] = &[
    OpSpec {
        kind: BoxKind::DataSource,
        op: "csv",
        doc: "load a CSV dataset (header row, one sample per row) from the data directory",
        inputs: &[],
        outputs: &[data("data")],
        params: &[ParamSpec {
            name: "file",
            ty: ParamType::Text,
            required: false,
            default: Some("<box id>.csv"),
            doc: "file name relative to the data directory",
        }],
    },
    OpSpec {
        kind: BoxKind::Coder,
        op: "std_PCA",
        doc: "standardization followed by PCA; outputs the encode and decode functions",
        inputs: &[data("train")],
        outputs: CODER_OUTPUTS,
        params: &[N_COMPONENTS],
    },
    OpSpec {
        kind: BoxKind::Coder,
        op: "PCA",
        doc: "centered PCA; outputs the projection and back-projection functions",
        inputs: &[data("train")],
        outputs: CODER_OUTPUTS,
        params: &[N_COMPONENTS],
    },
    OpSpec {
        kind: BoxKind::Coder,
        op: "standardize",
        doc: "per-feature standardization; outputs the encode and decode functions",
        inputs: &[data("train")],
        outputs: CODER_OUTPUTS,
        params: &[],
    },
    OpSpec {
        kind: BoxKind::Trainer,
        op: "mlp",
        doc: "fully-connected network trained by gradient descent on mean squared error",
        inputs: &[data("x"), data("y")],
        outputs: &[function("model")],
        params: &[
            ParamSpec {
                name: "hidden_layers",
                ty: ParamType::Text,
                required: false,
                default: Some("32"),
                doc: "comma-separated hidden layer widths",
            },
            ParamSpec {
                name: "activation",
                ty: ParamType::Text,
                required: false,
                default: Some("tanh"),
                doc: "hidden activation: tanh or relu",
            },
            ParamSpec {
                name: "learning_rate",
                ty: ParamType::Float,
                required: false,
                default: Some("0.05"),
                doc: "gradient descent step size",
            },
            ParamSpec {
                name: "epochs",
                ty: ParamType::Int,
                required: false,
                default: Some("2000"),
                doc: "passes over the training data",
            },
            ParamSpec {
                name: "batch",
                ty: ParamType::Int,
                required: false,
                default: Some("full"),
                doc: "mini-batch size; omit for full-batch descent",
            },
            ParamSpec {
                name: "seed",
                ty: ParamType::Int,
                required: false,
                default: Some("<run seed>"),
                doc: "initialization and shuffling seed",
            },
            ParamSpec {
                name: "normalize",
                ty: ParamType::Bool,
                required: false,
                default: Some("true"),
                doc: "standardize inputs and targets around the network",
            },
        ],
    },
    OpSpec {
        kind: BoxKind::Processor,
        op: "apply",
        doc: "apply a function to every row of a dataset",
        inputs: &[function("f"), data("x")],
        outputs: &[data("y")],
        params: &[],
    },
    OpSpec {
        kind: BoxKind::Processor,
        op: "compose",
        doc: "chain two functions: the first, then the second",
        inputs: &[function("first"), function("then")],
        outputs: &[function("composed")],
        params: &[],
    },
    OpSpec {
        kind: BoxKind::Processor,
        op: "score",
        doc: "compare predictions against ground truth (R2, RMSE, actual vs predicted pairs)",
        inputs: &[data("actual"), data("predicted")],
        outputs: &[],
        params: &[],
    },
    OpSpec {
        kind: BoxKind::FunctionExport,
        op: "export",
        doc: "export a function as part of the digital twin prototype",
        inputs: &[function("f")],
        outputs: &[],
        params: &[ParamSpec {
            name: "name",
            ty: ParamType::Text,
            required: false,
            default: Some("<input port name>"),
            doc: "export name",
        }],
    },
    OpSpec {
        kind: BoxKind::DataExport,
        op: "export",
        doc: "export a dataset",
        inputs: &[data("x")],
        outputs: &[],
        params: &[ParamSpec {
            name: "name",
            ty: ParamType::Text,
            required: false,
            default: Some("<input port name>"),
            doc: "export name",
        }],
    },
];

pub fn registry() -> &'static [OpSpec] {
    REGISTRY
}

pub fn lookup(kind: BoxKind, op: &str) -> Option<&'static OpSpec> {
    REGISTRY.iter().find(|s| s.kind == kind && s.op == op)
}

pub fn ops_for(kind: BoxKind) -> impl Iterator<Item = &'static OpSpec> {
    REGISTRY.iter().filter(move |s| s.kind == kind)
}
