use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagnostics::{Diagnostic, Severity};
use crate::graph::{
    serialize_pipeline, structural_errors, topological_boxes, BoxKind, Flavor, ParamValue, PipelineGraph, PortRef,
};
use crate::numerics::sha256_hex;
use crate::typing::{infer_types, PortType};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanOptions {
    pub seed: u64,
    /// Run even when typing warnings remain.
    pub allow_warnings: bool,
}

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("pipeline has {errors} error(s) and {warnings} unresolved warning(s)")]
    Blocked {
        errors: usize,
        warnings: usize,
        diagnostics: Vec<Diagnostic>,
    },
    #[error("box `{0}` is part of a cycle")]
    Cycle(String),
}

impl PlanError {
    pub fn diagnostics(&self) -> &[Diagnostic] {
        match self {
            PlanError::Blocked { diagnostics, .. } => diagnostics,
            PlanError::Cycle(_) => &[],
        }
    }
}

/// Where a step input comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Binding {
    pub port: String,
    pub source: PortRef,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepOutput {
    pub port: String,
    pub flavor: Flavor,
    /// Path of the persisted value, relative to the run directory.
    pub artifact: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ty: Option<PortType>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub box_id: String,
    pub kind: BoxKind,
    pub op: String,
    pub params: BTreeMap<String, ParamValue>,
    pub inputs: Vec<Binding>,
    pub outputs: Vec<StepOutput>,
}

impl Step {
    pub fn param(&self, name: &str) -> Option<&ParamValue> {
        self.params.get(name)
    }

    /// Artifacts this step writes besides its output ports.
    pub fn extra_artifacts(&self) -> Vec<String> {
        match self.kind {
            BoxKind::FunctionExport => self
                .inputs
                .iter()
                .map(|b| function_artifact(&self.box_id, &b.port))
                .collect(),
            BoxKind::DataExport => self
                .inputs
                .iter()
                .map(|b| dataset_artifact(&self.box_id, &b.port))
                .collect(),
            BoxKind::Processor if self.op == "score" => {
                vec![format!("reports/{}.score.json", self.box_id)]
            }
            BoxKind::Trainer => vec![format!("reports/{}.train.json", self.box_id)],
            _ => Vec::new(),
        }
    }
}

pub fn dataset_artifact(box_id: &str, port: &str) -> String {
    format!("datasets/{box_id}.{port}.csv")
}

pub fn function_artifact(box_id: &str, port: &str) -> String {
    format!("functions/{box_id}.{port}.fdf")
}

/// A validated pipeline in execution order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionPlan {
    pub pipeline_name: String,
    /// SHA-256 of the canonical pipeline text.
    pub pipeline_hash: String,
    pub seed: u64,
    pub steps: Vec<Step>,
    /// Warnings the plan was allowed to proceed with.
    pub diagnostics: Vec<Diagnostic>,
}

/// Orders the boxes topologically, breaking ties by box id.
///
/// Refuses graphs with structural errors, and graphs with typing warnings
/// unless `allow_warnings` is set. Warnings silenced by overrides never
/// arise in the first place.
pub fn plan(graph: &PipelineGraph, opts: PlanOptions) -> Result<ExecutionPlan, PlanError> {
    let structural = structural_errors(graph);
    if !structural.is_empty() {
        let diagnostics: Vec<Diagnostic> = structural.iter().map(|e| e.to_diagnostic()).collect();
        return Err(PlanError::Blocked {
            errors: diagnostics.len(),
            warnings: 0,
            diagnostics,
        });
    }
    let typing = infer_types(graph);
    let errors = crate::diagnostics::count(&typing.diagnostics, Severity::Error);
    let warnings = crate::diagnostics::count(&typing.diagnostics, Severity::Warning);
    if errors > 0 || (warnings > 0 && !opts.allow_warnings) {
        return Err(PlanError::Blocked {
            errors,
            warnings,
            diagnostics: typing.diagnostics,
        });
    }

    let order = topological_boxes(graph).map_err(PlanError::Cycle)?;
    let steps = order
        .into_iter()
        .map(|i| {
            let b = &graph.boxes[i];
            let inputs = b
                .in_ports
                .iter()
                .map(|p| {
                    let to = PortRef::new(b.id.clone(), p.name.clone());
                    let edge = graph.incoming(&to).expect("structurally valid: inputs connected");
                    Binding {
                        port: p.name.clone(),
                        source: edge.from.clone(),
                    }
                })
                .collect();
            let outputs = b
                .out_ports
                .iter()
                .map(|p| StepOutput {
                    port: p.name.clone(),
                    flavor: p.flavor,
                    artifact: match p.flavor {
                        Flavor::Data => dataset_artifact(&b.id, &p.name),
                        Flavor::Function => function_artifact(&b.id, &p.name),
                    },
                    ty: typing.port(&PortRef::new(b.id.clone(), p.name.clone())).cloned(),
                })
                .collect();
            Step {
                box_id: b.id.clone(),
                kind: b.kind,
                op: b.op.clone(),
                params: b.params.clone(),
                inputs,
                outputs,
            }
        })
        .collect();

    Ok(ExecutionPlan {
        pipeline_name: graph.name.clone(),
        pipeline_hash: sha256_hex(serialize_pipeline(graph).as_bytes()),
        seed: opts.seed,
        steps,
        diagnostics: typing.diagnostics,
    })
}

impl ExecutionPlan {
    /// One line per step:
    /// `box = kind/op(port=source, ...) {param=value, ...} -> artifact, ...`
    pub fn listing(&self) -> String {
        let mut out = String::new();
        for step in &self.steps {
            let inputs: Vec<String> = step.inputs.iter().map(|b| format!("{}={}", b.port, b.source)).collect();
            let params: Vec<String> = step.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
            let mut artifacts: Vec<String> = step.outputs.iter().map(|o| o.artifact.clone()).collect();
            artifacts.extend(step.extra_artifacts());
            let _ = write!(
                out,
                "{} = {}/{}({}) {{{}}}",
                step.box_id,
                step.kind,
                step.op,
                inputs.join(", "),
                params.join(", ")
            );
            if !artifacts.is_empty() {
                let _ = write!(out, " -> {}", artifacts.join(", "));
            }
            out.push('\n');
        }
        out
    }

    pub fn step_index(&self, box_id: &str) -> Option<usize> {
        self.steps.iter().position(|s| s.box_id == box_id)
    }
}

/// Lowered, human-readable form of the plan for `graph`.
pub fn lower(graph: &PipelineGraph, opts: PlanOptions) -> Result<String, PlanError> {
    plan(graph, opts).map(|p| p.listing())
}
