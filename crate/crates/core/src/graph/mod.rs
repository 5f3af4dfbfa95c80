//! In-memory model of an FDF pipeline.
//!
//! A [`PipelineGraph`] is an immutable value once parsed. Structural
//! problems are reported by [`structural_errors`]; typing problems live in
//! [`crate::typing`]. [`validate`] combines both.

mod check;
mod format;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub use check::{structural_errors, topological_boxes, StructuralError};
pub use format::{parse_document, parse_pipeline, serialize_pipeline, ParseError};

use crate::diagnostics::Diagnostic;

/// Current pipeline file format version.
pub const FORMAT_VERSION: &str = "1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoxKind {
    DataSource,
    Coder,
    Trainer,
    Processor,
    FunctionExport,
    DataExport,
}

impl BoxKind {
    pub const ALL: [BoxKind; 6] = [
        BoxKind::DataSource,
        BoxKind::Coder,
        BoxKind::Trainer,
        BoxKind::Processor,
        BoxKind::FunctionExport,
        BoxKind::DataExport,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BoxKind::DataSource => "data_source",
            BoxKind::Coder => "coder",
            BoxKind::Trainer => "trainer",
            BoxKind::Processor => "processor",
            BoxKind::FunctionExport => "function_export",
            BoxKind::DataExport => "data_export",
        }
    }
}

impl fmt::Display for BoxKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Whether a port carries a dataset or a function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flavor {
    Data,
    Function,
}

impl fmt::Display for Flavor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Flavor::Data => "data",
            Flavor::Function => "function",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PortSpec {
    pub name: String,
    pub flavor: Flavor,
}

impl PortSpec {
    pub fn data(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            flavor: Flavor::Data,
        }
    }

    pub fn function(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            flavor: Flavor::Function,
        }
    }
}

/// A box parameter value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Bool(bool),
    Int(i64),
    Float(f64),
    Text(String),
}

impl ParamValue {
    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            ParamValue::Int(v) => Some(v as f64),
            ParamValue::Float(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_i64(&self) -> Option<i64> {
        match *self {
            ParamValue::Int(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            ParamValue::Text(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match *self {
            ParamValue::Bool(b) => Some(b),
            _ => None,
        }
    }
}

impl From<bool> for ParamValue {
    fn from(v: bool) -> Self {
        ParamValue::Bool(v)
    }
}

impl From<i64> for ParamValue {
    fn from(v: i64) -> Self {
        ParamValue::Int(v)
    }
}

impl From<f64> for ParamValue {
    fn from(v: f64) -> Self {
        ParamValue::Float(v)
    }
}

impl From<&str> for ParamValue {
    fn from(v: &str) -> Self {
        ParamValue::Text(v.to_string())
    }
}

impl From<String> for ParamValue {
    fn from(v: String) -> Self {
        ParamValue::Text(v)
    }
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Bool(b) => write!(f, "{b}"),
            ParamValue::Int(v) => write!(f, "{v}"),
            ParamValue::Float(v) => write!(f, "{v:?}"),
            ParamValue::Text(s) => write!(f, "{s:?}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub id: String,
    pub kind: BoxKind,
    pub op: String,
    #[serde(default)]
    pub params: BTreeMap<String, ParamValue>,
    #[serde(default)]
    pub in_ports: Vec<PortSpec>,
    #[serde(default)]
    pub out_ports: Vec<PortSpec>,
}

impl BoxSpec {
    pub fn new(id: impl Into<String>, kind: BoxKind, op: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            kind,
            op: op.into(),
            params: BTreeMap::new(),
            in_ports: Vec::new(),
            out_ports: Vec::new(),
        }
    }

    pub fn with_param(mut self, name: impl Into<String>, value: impl Into<ParamValue>) -> Self {
        self.params.insert(name.into(), value.into());
        self
    }

    pub fn with_inputs(mut self, ports: impl IntoIterator<Item = PortSpec>) -> Self {
        self.in_ports.extend(ports);
        self
    }

    pub fn with_outputs(mut self, ports: impl IntoIterator<Item = PortSpec>) -> Self {
        self.out_ports.extend(ports);
        self
    }

    pub fn in_port(&self, name: &str) -> Option<(usize, &PortSpec)> {
        self.in_ports.iter().enumerate().find(|(_, p)| p.name == name)
    }

    pub fn out_port(&self, name: &str) -> Option<(usize, &PortSpec)> {
        self.out_ports.iter().enumerate().find(|(_, p)| p.name == name)
    }
}

/// `box.port` reference used by edges and override anchors.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PortRef {
    pub box_id: String,
    pub port: String,
}

impl PortRef {
    pub fn new(box_id: impl Into<String>, port: impl Into<String>) -> Self {
        Self {
            box_id: box_id.into(),
            port: port.into(),
        }
    }
}

impl fmt::Display for PortRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.box_id, self.port)
    }
}

impl FromStr for PortRef {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once('.') {
            Some((b, p)) if !b.is_empty() && !p.is_empty() && !p.contains('.') => Ok(PortRef::new(b, p)),
            _ => Err(format!("expected `box.port`, found {s:?}")),
        }
    }
}

impl Serialize for PortRef {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PortRef {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Edge {
    pub from: PortRef,
    pub to: PortRef,
}

impl Edge {
    pub fn new(from: PortRef, to: PortRef) -> Self {
        Self { from, to }
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {}", self.from, self.to)
    }
}

/// User assertion that the implicit types found at two data output ports
/// are the same. Serialized as a two-element array.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Override(pub PortRef, pub PortRef);

impl fmt::Display for Override {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}", self.0, self.1)
    }
}

/// An FDF program.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineGraph {
    pub version: String,
    pub name: String,
    pub boxes: Vec<BoxSpec>,
    #[serde(default)]
    pub edges: Vec<Edge>,
    #[serde(default)]
    pub overrides: Vec<Override>,
    /// Editor layout sidecar. Preserved verbatim, never read by the engine.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layout: Option<serde_json::Value>,
}

impl PipelineGraph {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            version: FORMAT_VERSION.to_string(),
            name: name.into(),
            boxes: Vec::new(),
            edges: Vec::new(),
            overrides: Vec::new(),
            layout: None,
        }
    }

    pub fn add_box(&mut self, spec: BoxSpec) -> &mut Self {
        self.boxes.push(spec);
        self
    }

    /// Adds an edge given `box.port` strings.
    ///
    /// Panics if either reference is malformed; meant for building graphs in
    /// code, not for parsing user input.
    pub fn connect(&mut self, from: &str, to: &str) -> &mut Self {
        let from = from.parse().expect("malformed `from` port reference");
        let to = to.parse().expect("malformed `to` port reference");
        self.edges.push(Edge::new(from, to));
        self
    }

    pub fn add_override(&mut self, left: &str, right: &str) -> &mut Self {
        let left = left.parse().expect("malformed override anchor");
        let right = right.parse().expect("malformed override anchor");
        self.overrides.push(Override(left, right));
        self
    }

    pub fn find_box(&self, id: &str) -> Option<&BoxSpec> {
        self.boxes.iter().find(|b| b.id == id)
    }

    pub fn box_index(&self, id: &str) -> Option<usize> {
        self.boxes.iter().position(|b| b.id == id)
    }

    /// The edge feeding an input port, if any.
    pub fn incoming(&self, to: &PortRef) -> Option<&Edge> {
        self.edges.iter().find(|e| &e.to == to)
    }

    pub fn boxes_of_kind(&self, kind: BoxKind) -> impl Iterator<Item = &BoxSpec> {
        self.boxes.iter().filter(move |b| b.kind == kind)
    }

    /// Boxes that compute something: coders, trainers and processors.
    pub fn processing_boxes(&self) -> impl Iterator<Item = &BoxSpec> {
        self.boxes
            .iter()
            .filter(|b| matches!(b.kind, BoxKind::Coder | BoxKind::Trainer | BoxKind::Processor))
    }
}

/// Structural errors followed by typing warnings. Empty iff the graph is
/// runnable without overrides or a warning escape.
pub fn validate(graph: &PipelineGraph) -> Vec<Diagnostic> {
    let errors = structural_errors(graph);
    if !errors.is_empty() {
        return errors.iter().map(StructuralError::to_diagnostic).collect();
    }
    crate::typing::infer_types(graph).diagnostics
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn port_ref_parsing() {
        assert_eq!(
            "reduce_eps.eps_red".parse::<PortRef>().unwrap(),
            PortRef::new("reduce_eps", "eps_red")
        );
        assert!("nodot".parse::<PortRef>().is_err());
        assert!(".port".parse::<PortRef>().is_err());
        assert!("a.b.c".parse::<PortRef>().is_err());
    }

    #[test]
    fn param_value_untagged_order() {
        let v: ParamValue = serde_json::from_str("10").unwrap();
        assert_eq!(v, ParamValue::Int(10));
        let v: ParamValue = serde_json::from_str("0.5").unwrap();
        assert_eq!(v, ParamValue::Float(0.5));
        let v: ParamValue = serde_json::from_str("2.0").unwrap();
        assert_eq!(v, ParamValue::Float(2.0));
        assert_eq!(serde_json::to_string(&v).unwrap(), "2.0");
        let v: ParamValue = serde_json::from_str("true").unwrap();
        assert_eq!(v, ParamValue::Bool(true));
    }
}
