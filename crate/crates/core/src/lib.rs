//! Function+Data Flow (FDF) pipelines for building ML-based digital twin
//! prototypes.
//!
//! An FDF pipeline is a graph whose edges carry either datasets (data
//! edges) or learned functions (function edges). Boxes fit, apply, compose,
//! score and export those functions:
//!
//! - **Coder** boxes learn an encode/decode pair without supervision
//!   (standardization, PCA, or both chained).
//! - **Trainer** boxes learn a function with supervision (an MLP trained by
//!   gradient descent).
//! - **Processor** boxes apply, compose or score functions produced elsewhere.
//!
//! The crate is organized as:
//!
//! - [`graph`]: the pipeline model, its text format and structural checks.
//! - [`typing`]: provenance-based implicit types and override handling.
//! - [`library`]: the registry of box kinds, ops, ports and parameters.
//! - [`numerics`]: datasets, learnable functions and scoring.
//! - [`exec`]: planning, lowering, running and the synthetic DoE generator.
//! - [`chart`]: actual-vs-predicted chart documents and SVG rendering.
//! - [`cli`] and [`service`]: the command line and the local HTTP service.
//!
//! See the `examples/` directory of this crate for one runnable program per
//! capability.

pub mod chart;
pub mod cli;
pub mod diagnostics;
pub mod exec;
pub mod graph;
pub mod library;
pub mod numerics;
pub mod service;
pub mod typing;

pub use diagnostics::{Diagnostic, Locus, Severity, SuggestedOverride};
pub use exec::{
    generate_doe_dataset, lower, plan, run, DoeSpec, ExecutionPlan, PlanOptions, RunManifest, RunOptions, RunStatus,
};
pub use graph::{
    parse_pipeline, serialize_pipeline, validate, BoxKind, BoxSpec, Edge, Flavor, Override, ParamValue, PipelineGraph,
    PortRef, PortSpec,
};
pub use numerics::{Dataset, FunctionValue, ScoreReport, TrainConfig};
pub use typing::{infer_types, PortType, Signature, TypeTag, Typing};

/// Engine version recorded in run manifests and function artifacts.
pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");
