use std::collections::{BTreeSet, HashMap, HashSet};

use thiserror::Error;

use super::{BoxKind, Edge, Flavor, PipelineGraph, PortRef, FORMAT_VERSION};
use crate::diagnostics::{Diagnostic, Locus};
use crate::library;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StructuralError {
    #[error("unsupported format version {found:?} (expected {FORMAT_VERSION:?})")]
    UnsupportedVersion { found: String },
    #[error("duplicate box id `{box_id}`")]
    DuplicateBox { box_id: String },
    #[error("duplicate {direction} port `{port}` on box `{box_id}`")]
    DuplicatePort {
        box_id: String,
        port: String,
        direction: &'static str,
    },
    #[error("unknown op `{op}` for {kind} box `{box_id}`")]
    UnknownOp { box_id: String, kind: BoxKind, op: String },
    #[error("box `{box_id}` ({kind}/{op}) needs {expected} {direction} ports, found {found}")]
    Arity {
        box_id: String,
        kind: BoxKind,
        op: String,
        direction: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("port `{box_id}.{port}` must be a {expected} port, declared {found}")]
    PortFlavor {
        box_id: String,
        port: String,
        expected: Flavor,
        found: Flavor,
    },
    #[error("missing required parameter `{param}` on box `{box_id}`")]
    MissingParam { box_id: String, param: String },
    #[error("unknown parameter `{param}` on box `{box_id}`")]
    UnknownParam { box_id: String, param: String },
    #[error("invalid value for parameter `{param}` on box `{box_id}`: {reason}")]
    InvalidParam {
        box_id: String,
        param: String,
        reason: String,
    },
    #[error("edge {edge} references unknown box `{box_id}`")]
    UnknownBox { edge: Edge, box_id: String },
    #[error("edge {edge} references unknown port `{port}`")]
    UnknownPort { edge: Edge, port: PortRef },
    #[error("edge {edge} must run from an output port to an input port")]
    Direction { edge: Edge },
    #[error("edge {edge} connects a {from} port to a {to} port")]
    FlavorMismatch { edge: Edge, from: Flavor, to: Flavor },
    #[error("input port `{port}` has more than one incoming edge")]
    FanIn { port: PortRef },
    #[error("input port `{port}` is not connected")]
    Unconnected { port: PortRef },
    #[error("box `{box_id}` is part of a cycle")]
    Cycle { box_id: String },
    #[error("override anchor `{anchor}` must name a data output port")]
    BadOverrideAnchor { anchor: PortRef },
}

impl StructuralError {
    pub fn code(&self) -> &'static str {
        match self {
            StructuralError::UnsupportedVersion { .. } => "E-version",
            StructuralError::DuplicateBox { .. } => "E-duplicate-box",
            StructuralError::DuplicatePort { .. } => "E-duplicate-port",
            StructuralError::UnknownOp { .. } => "E-unknown-op",
            StructuralError::Arity { .. } => "E-arity",
            StructuralError::PortFlavor { .. } => "E-port-flavor",
            StructuralError::MissingParam { .. } => "E-missing-param",
            StructuralError::UnknownParam { .. } => "E-unknown-param",
            StructuralError::InvalidParam { .. } => "E-invalid-param",
            StructuralError::UnknownBox { .. } => "E-unknown-box",
            StructuralError::UnknownPort { .. } => "E-unknown-port",
            StructuralError::Direction { .. } => "E-direction",
            StructuralError::FlavorMismatch { .. } => "E-flavor-mismatch",
            StructuralError::FanIn { .. } => "E-fan-in",
            StructuralError::Unconnected { .. } => "E-unconnected",
            StructuralError::Cycle { .. } => "E-cycle",
            StructuralError::BadOverrideAnchor { .. } => "E-override-anchor",
        }
    }

    pub fn locus(&self) -> Locus {
        use StructuralError::*;
        match self {
            UnsupportedVersion { .. } => Locus::document(),
            DuplicateBox { box_id }
            | UnknownOp { box_id, .. }
            | Arity { box_id, .. }
            | MissingParam { box_id, .. }
            | UnknownParam { box_id, .. }
            | InvalidParam { box_id, .. }
            | Cycle { box_id } => Locus::of_box(box_id.clone()),
            DuplicatePort { box_id, port, .. } | PortFlavor { box_id, port, .. } => {
                Locus::of_port(box_id.clone(), port.clone())
            }
            // Edge problems are anchored on the receiving end when that box
            // exists, else on the sending end.
            UnknownBox { edge, box_id } => {
                let end = if &edge.to.box_id == box_id {
                    &edge.from
                } else {
                    &edge.to
                };
                Locus::of_port(end.box_id.clone(), end.port.clone())
            }
            UnknownPort { port, .. } => Locus::of_port(port.box_id.clone(), port.port.clone()),
            Direction { edge } | FlavorMismatch { edge, .. } => {
                Locus::of_port(edge.to.box_id.clone(), edge.to.port.clone())
            }
            FanIn { port } | Unconnected { port } | BadOverrideAnchor { anchor: port } => {
                Locus::of_port(port.box_id.clone(), port.port.clone())
            }
        }
    }

    pub fn to_diagnostic(&self) -> Diagnostic {
        Diagnostic::error(self.code(), self.locus(), self.to_string())
    }
}

/// Every structural invariant violation, in a deterministic order: document
/// checks, then boxes in file order, then edges in file order, then input
/// connectivity, then cycles, then override anchors.
pub fn structural_errors(graph: &PipelineGraph) -> Vec<StructuralError> {
    let mut errors = Vec::new();

    if graph.version != FORMAT_VERSION {
        errors.push(StructuralError::UnsupportedVersion {
            found: graph.version.clone(),
        });
    }

    let mut seen = HashSet::new();
    for b in &graph.boxes {
        if !seen.insert(b.id.as_str()) {
            errors.push(StructuralError::DuplicateBox { box_id: b.id.clone() });
        }
        check_box(b, &mut errors);
    }

    let mut fed: HashMap<PortRef, usize> = HashMap::new();
    for edge in &graph.edges {
        if let Some(err) = check_edge(graph, edge) {
            errors.push(err);
            continue;
        }
        *fed.entry(edge.to.clone()).or_default() += 1;
    }

    let mut fan_in_reported = HashSet::new();
    for edge in &graph.edges {
        if fed.get(&edge.to).copied().unwrap_or(0) > 1 && fan_in_reported.insert(&edge.to) {
            errors.push(StructuralError::FanIn { port: edge.to.clone() });
        }
    }

    for b in &graph.boxes {
        for p in &b.in_ports {
            let port = PortRef::new(b.id.clone(), p.name.clone());
            if !fed.contains_key(&port) {
                errors.push(StructuralError::Unconnected { port });
            }
        }
    }

    if let Err(box_id) = topological_boxes(graph) {
        errors.push(StructuralError::Cycle { box_id });
    }

    for o in &graph.overrides {
        for anchor in [&o.0, &o.1] {
            let ok = graph
                .find_box(&anchor.box_id)
                .and_then(|b| b.out_port(&anchor.port))
                .is_some_and(|(_, p)| p.flavor == Flavor::Data);
            if !ok {
                errors.push(StructuralError::BadOverrideAnchor { anchor: anchor.clone() });
            }
        }
    }

    errors
}

fn check_box(b: &super::BoxSpec, errors: &mut Vec<StructuralError>) {
    for (direction, ports) in [("input", &b.in_ports), ("output", &b.out_ports)] {
        let mut names = HashSet::new();
        for p in ports.iter() {
            if !names.insert(p.name.as_str()) {
                errors.push(StructuralError::DuplicatePort {
                    box_id: b.id.clone(),
                    port: p.name.clone(),
                    direction,
                });
            }
        }
    }

    let Some(spec) = library::lookup(b.kind, &b.op) else {
        errors.push(StructuralError::UnknownOp {
            box_id: b.id.clone(),
            kind: b.kind,
            op: b.op.clone(),
        });
        return;
    };

    for (direction, ports, slots) in [
        ("input", &b.in_ports, spec.inputs),
        ("output", &b.out_ports, spec.outputs),
    ] {
        if ports.len() != slots.len() {
            errors.push(StructuralError::Arity {
                box_id: b.id.clone(),
                kind: b.kind,
                op: b.op.clone(),
                direction,
                expected: slots.len(),
                found: ports.len(),
            });
            continue;
        }
        for (port, slot) in ports.iter().zip(slots) {
            if port.flavor != slot.flavor {
                errors.push(StructuralError::PortFlavor {
                    box_id: b.id.clone(),
                    port: port.name.clone(),
                    expected: slot.flavor,
                    found: port.flavor,
                });
            }
        }
    }

    for p in spec.params.iter().filter(|p| p.required) {
        if !b.params.contains_key(p.name) {
            errors.push(StructuralError::MissingParam {
                box_id: b.id.clone(),
                param: p.name.to_string(),
            });
        }
    }
    for (name, value) in &b.params {
        match spec.param(name) {
            None => errors.push(StructuralError::UnknownParam {
                box_id: b.id.clone(),
                param: name.clone(),
            }),
            Some(p) if !p.ty.accepts(value) => errors.push(StructuralError::InvalidParam {
                box_id: b.id.clone(),
                param: name.clone(),
                reason: format!("expected {:?}, found {value}", p.ty).to_lowercase(),
            }),
            Some(_) => {}
        }
    }
}

fn check_edge(graph: &PipelineGraph, edge: &Edge) -> Option<StructuralError> {
    let mut flavors = [Flavor::Data; 2];
    for (i, end) in [&edge.from, &edge.to].into_iter().enumerate() {
        let Some(b) = graph.find_box(&end.box_id) else {
            return Some(StructuralError::UnknownBox {
                edge: edge.clone(),
                box_id: end.box_id.clone(),
            });
        };
        let (own, other) = if i == 0 {
            (b.out_port(&end.port), b.in_port(&end.port))
        } else {
            (b.in_port(&end.port), b.out_port(&end.port))
        };
        match (own, other) {
            (Some((_, p)), _) => flavors[i] = p.flavor,
            (None, Some(_)) => return Some(StructuralError::Direction { edge: edge.clone() }),
            (None, None) => {
                return Some(StructuralError::UnknownPort {
                    edge: edge.clone(),
                    port: end.clone(),
                })
            }
        }
    }
    if flavors[0] != flavors[1] {
        return Some(StructuralError::FlavorMismatch {
            edge: edge.clone(),
            from: flavors[0],
            to: flavors[1],
        });
    }
    None
}

/// Box indices in a topological order of the box graph, ties broken by
/// box id. Edges naming unknown boxes are ignored.
///
/// On a cycle, returns the id of the first box (in file order) that could not
/// be scheduled.
pub fn topological_boxes(graph: &PipelineGraph) -> Result<Vec<usize>, String> {
    let index: HashMap<&str, usize> = graph
        .boxes
        .iter()
        .enumerate()
        .map(|(i, b)| (b.id.as_str(), i))
        .collect();
    let n = graph.boxes.len();
    let mut indegree = vec![0usize; n];
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut seen_pairs = HashSet::new();
    for e in &graph.edges {
        let (Some(&u), Some(&v)) = (index.get(e.from.box_id.as_str()), index.get(e.to.box_id.as_str())) else {
            continue;
        };
        if seen_pairs.insert((u, v)) {
            indegree[v] += 1;
            succ[u].push(v);
        }
    }

    let mut ready: BTreeSet<(&str, usize)> = (0..n)
        .filter(|&i| indegree[i] == 0)
        .map(|i| (graph.boxes[i].id.as_str(), i))
        .collect();
    let mut order = Vec::with_capacity(n);
    while let Some(next) = ready.pop_first() {
        let u = next.1;
        order.push(u);
        for &v in &succ[u] {
            indegree[v] -= 1;
            if indegree[v] == 0 {
                ready.insert((graph.boxes[v].id.as_str(), v));
            }
        }
    }
    if order.len() < n {
        let stuck = (0..n).find(|&i| indegree[i] > 0).unwrap();
        return Err(graph.boxes[stuck].id.clone());
    }
    Ok(order)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{BoxSpec, ParamValue, PortSpec};

    fn source(id: &str) -> BoxSpec {
        BoxSpec::new(id, BoxKind::DataSource, "csv").with_outputs([PortSpec::data(id)])
    }

    fn apply(id: &str) -> BoxSpec {
        BoxSpec::new(id, BoxKind::Processor, "apply")
            .with_inputs([PortSpec::function("f"), PortSpec::data("x")])
            .with_outputs([PortSpec::data("y")])
    }

    #[test]
    fn self_loop_is_one_cycle_error() {
        let mut g = PipelineGraph::new("loop");
        g.add_box(source("src"))
            .add_box(
                BoxSpec::new("std", BoxKind::Coder, "standardize")
                    .with_inputs([PortSpec::data("train")])
                    .with_outputs([PortSpec::function("enc"), PortSpec::function("dec")]),
            )
            .add_box(apply("p"))
            .connect("std.enc", "p.f")
            .connect("p.y", "p.x")
            .connect("src.src", "std.train");
        let errors = structural_errors(&g);
        assert_eq!(errors, vec![StructuralError::Cycle { box_id: "p".into() }]);
    }

    #[test]
    fn arity_and_unknown_op() {
        let mut g = PipelineGraph::new("bad");
        g.add_box(BoxSpec::new("a", BoxKind::Coder, "kmeans"))
            .add_box(BoxSpec::new("b", BoxKind::DataSource, "csv"));
        let codes: Vec<_> = structural_errors(&g).iter().map(|e| e.code()).collect();
        assert_eq!(codes, ["E-unknown-op", "E-arity"]);
    }

    #[test]
    fn edge_direction_and_flavor() {
        let mut g = PipelineGraph::new("edges");
        g.add_box(source("s")).add_box(apply("p"));
        g.connect("s.s", "p.f");
        g.connect("p.x", "s.s");
        let errors = structural_errors(&g);
        assert!(matches!(
            errors[0],
            StructuralError::FlavorMismatch {
                from: Flavor::Data,
                to: Flavor::Function,
                ..
            }
        ));
        assert!(matches!(errors[1], StructuralError::Direction { .. }));
    }

    #[test]
    fn fan_in_reported_once_and_fan_out_allowed() {
        let mut g = PipelineGraph::new("fan");
        g.add_box(source("s1"))
            .add_box(source("s2"))
            .add_box(
                BoxSpec::new("sc", BoxKind::Processor, "score").with_inputs([PortSpec::data("a"), PortSpec::data("b")]),
            )
            .connect("s1.s1", "sc.a")
            .connect("s2.s2", "sc.a")
            .connect("s1.s1", "sc.b");
        let errors = structural_errors(&g);
        assert_eq!(
            errors,
            vec![StructuralError::FanIn {
                port: PortRef::new("sc", "a")
            }]
        );
    }

    #[test]
    fn params_checked_against_registry() {
        let mut g = PipelineGraph::new("params");
        g.add_box(source("s")).add_box(
            BoxSpec::new("c", BoxKind::Coder, "PCA")
                .with_inputs([PortSpec::data("t")])
                .with_outputs([PortSpec::function("e"), PortSpec::function("d")])
                .with_param("n_components", ParamValue::Text("ten".into()))
                .with_param("whiten", ParamValue::Bool(true)),
        );
        g.connect("s.s", "c.t");
        let codes: Vec<_> = structural_errors(&g).iter().map(|e| e.code()).collect();
        assert_eq!(codes, ["E-invalid-param", "E-unknown-param"]);
    }

    #[test]
    fn topological_order_breaks_ties_by_id() {
        let mut g = PipelineGraph::new("ties");
        g.add_box(source("zeta"))
            .add_box(source("alpha"))
            .add_box(source("mid"));
        let order = topological_boxes(&g).unwrap();
        let ids: Vec<_> = order.iter().map(|&i| g.boxes[i].id.as_str()).collect();
        assert_eq!(ids, ["alpha", "mid", "zeta"]);
    }
}
