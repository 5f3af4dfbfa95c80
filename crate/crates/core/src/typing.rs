//! Implicit types.
//!
//! Every data output port gets a [`TypeTag`] recording where its values come
//! from: the data source port they originate at plus the chain of encodings
//! applied since. Function ports get a [`Signature`] of two tags. Two tags are
//! compatible when they fall in the same union-find class; classes start as
//! singletons and are merged by the pipeline's overrides.
//!
//! Mismatches are warnings, never errors: the author can either rewire the
//! pipeline or declare an override asserting that the two types agree.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::diagnostics::{Diagnostic, Locus, SuggestedOverride};
use crate::graph::{topological_boxes, BoxKind, BoxSpec, Flavor, Override, PipelineGraph, PortRef};

/// One encoding step in a tag's derivation: the box that learned the
/// transform and what it does.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Derivation {
    pub box_id: String,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TypeTag {
    pub origin: String,
    pub port: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub derivation: Vec<Derivation>,
}

impl TypeTag {
    pub fn base(origin: impl Into<String>, port: impl Into<String>) -> Self {
        Self {
            origin: origin.into(),
            port: port.into(),
            derivation: Vec::new(),
        }
    }

    pub fn derive(&self, box_id: &str, label: &str) -> Self {
        let mut tag = self.clone();
        tag.derivation.push(Derivation {
            box_id: box_id.to_string(),
            label: label.to_string(),
        });
        tag
    }
}

impl fmt::Display for TypeTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.origin, self.port)?;
        for step in &self.derivation {
            write!(f, "|{}:{}", step.box_id, step.label)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Signature {
    pub input: TypeTag,
    pub output: TypeTag,
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {}", self.input, self.output)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "flavor", rename_all = "snake_case")]
pub enum PortType {
    Data { tag: TypeTag },
    Function { signature: Signature },
}

impl PortType {
    pub fn tag(&self) -> Option<&TypeTag> {
        match self {
            PortType::Data { tag } => Some(tag),
            PortType::Function { .. } => None,
        }
    }

    pub fn signature(&self) -> Option<&Signature> {
        match self {
            PortType::Function { signature } => Some(signature),
            PortType::Data { .. } => None,
        }
    }
}

/// Union-find over interned tags, with path halving and union by rank.
#[derive(Debug, Clone, Default)]
pub struct TypeClasses {
    ids: HashMap<TypeTag, usize>,
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl TypeClasses {
    fn intern(&mut self, tag: &TypeTag) -> usize {
        if let Some(&id) = self.ids.get(tag) {
            return id;
        }
        let id = self.parent.len();
        self.ids.insert(tag.clone(), id);
        self.parent.push(id);
        self.rank.push(0);
        id
    }

    fn find_id(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn root_of(&self, mut x: usize) -> usize {
        while self.parent[x] != x {
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: &TypeTag, b: &TypeTag) {
        let (a, b) = (self.intern(a), self.intern(b));
        let (ra, rb) = (self.find_id(a), self.find_id(b));
        if ra == rb {
            return;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
    }

    /// Whether two tags are in the same class. Tags never seen are only
    /// equivalent to themselves.
    pub fn equivalent(&self, a: &TypeTag, b: &TypeTag) -> bool {
        if a == b {
            return true;
        }
        match (self.ids.get(a), self.ids.get(b)) {
            (Some(&x), Some(&y)) => self.root_of(x) == self.root_of(y),
            _ => false,
        }
    }
}

/// Result of [`infer_types`].
#[derive(Debug, Clone)]
pub struct Typing {
    /// Type of every output port that could be typed.
    pub ports: BTreeMap<PortRef, PortType>,
    pub diagnostics: Vec<Diagnostic>,
    pub classes: TypeClasses,
}

impl Typing {
    pub fn port(&self, port: &PortRef) -> Option<&PortType> {
        self.ports.get(port)
    }

    /// Type of the value arriving at an input port.
    pub fn incoming(&self, graph: &PipelineGraph, port: &PortRef) -> Option<&PortType> {
        graph.incoming(port).and_then(|e| self.ports.get(&e.from))
    }
}

/// Assigns implicit types to every output port and reports mismatches.
///
/// Expects a structurally valid graph; on invalid graphs it types what it can
/// and skips the rest.
pub fn infer_types(graph: &PipelineGraph) -> Typing {
    let order = topological_boxes(graph).unwrap_or_else(|_| (0..graph.boxes.len()).collect());

    let mut ports = BTreeMap::new();
    for &i in &order {
        type_outputs(graph, &graph.boxes[i], &mut ports);
    }

    let mut classes = TypeClasses::default();
    for t in ports.values() {
        match t {
            PortType::Data { tag } => {
                classes.intern(tag);
            }
            PortType::Function { signature } => {
                classes.intern(&signature.input);
                classes.intern(&signature.output);
            }
        }
    }
    for Override(a, b) in &graph.overrides {
        if let (Some(PortType::Data { tag: ta }), Some(PortType::Data { tag: tb })) = (ports.get(a), ports.get(b)) {
            classes.union(ta, tb);
        }
    }

    let mut diagnostics = Vec::new();
    for b in &graph.boxes {
        check_box(graph, b, &ports, &classes, &mut diagnostics);
    }

    Typing {
        ports,
        diagnostics,
        classes,
    }
}

fn incoming<'a>(
    graph: &PipelineGraph,
    ports: &'a BTreeMap<PortRef, PortType>,
    b: &BoxSpec,
    slot: usize,
) -> Option<(&'a PortType, PortRef)> {
    let name = &b.in_ports.get(slot)?.name;
    let edge = graph.incoming(&PortRef::new(b.id.clone(), name.clone()))?;
    ports.get(&edge.from).map(|t| (t, edge.from.clone()))
}

fn type_outputs(graph: &PipelineGraph, b: &BoxSpec, ports: &mut BTreeMap<PortRef, PortType>) {
    let out = |slot: usize| {
        b.out_ports
            .get(slot)
            .map(|p| PortRef::new(b.id.clone(), p.name.clone()))
    };
    let data_in =
        |ports: &BTreeMap<PortRef, PortType>, slot| incoming(graph, ports, b, slot).and_then(|(t, _)| t.tag().cloned());
    let fn_in = |ports: &BTreeMap<PortRef, PortType>, slot| {
        incoming(graph, ports, b, slot).and_then(|(t, _)| t.signature().cloned())
    };

    match (b.kind, b.op.as_str()) {
        (BoxKind::DataSource, _) => {
            for p in b.out_ports.iter().filter(|p| p.flavor == Flavor::Data) {
                ports.insert(
                    PortRef::new(b.id.clone(), p.name.clone()),
                    PortType::Data {
                        tag: TypeTag::base(b.id.clone(), p.name.clone()),
                    },
                );
            }
        }
        (BoxKind::Coder, _) => {
            let Some(input) = data_in(ports, 0) else { return };
            let encoded = input.derive(&b.id, "encode");
            if let Some(enc) = out(0) {
                ports.insert(
                    enc,
                    PortType::Function {
                        signature: Signature {
                            input: input.clone(),
                            output: encoded.clone(),
                        },
                    },
                );
            }
            if let Some(dec) = out(1) {
                ports.insert(
                    dec,
                    PortType::Function {
                        signature: Signature {
                            input: encoded,
                            output: input,
                        },
                    },
                );
            }
        }
        (BoxKind::Trainer, _) => {
            let (Some(x), Some(y)) = (data_in(ports, 0), data_in(ports, 1)) else {
                return;
            };
            if let Some(model) = out(0) {
                ports.insert(
                    model,
                    PortType::Function {
                        signature: Signature { input: x, output: y },
                    },
                );
            }
        }
        (BoxKind::Processor, "apply") => {
            let Some(f) = fn_in(ports, 0) else { return };
            if let Some(y) = out(0) {
                ports.insert(y, PortType::Data { tag: f.output });
            }
        }
        (BoxKind::Processor, "compose") => {
            let (Some(first), Some(then)) = (fn_in(ports, 0), fn_in(ports, 1)) else {
                return;
            };
            if let Some(c) = out(0) {
                ports.insert(
                    c,
                    PortType::Function {
                        signature: Signature {
                            input: first.input,
                            output: then.output,
                        },
                    },
                );
            }
        }
        _ => {}
    }
}

fn check_box(
    graph: &PipelineGraph,
    b: &BoxSpec,
    ports: &BTreeMap<PortRef, PortType>,
    classes: &TypeClasses,
    out: &mut Vec<Diagnostic>,
) {
    if b.kind != BoxKind::Processor {
        return;
    }
    let input = |slot| incoming(graph, ports, b, slot);
    match b.op.as_str() {
        "apply" => {
            let (Some((f, f_src)), Some((d, d_src))) = (input(0), input(1)) else {
                return;
            };
            let (Some(sig), Some(tag)) = (f.signature(), d.tag()) else {
                return;
            };
            if !classes.equivalent(tag, &sig.input) {
                let message = format!(
                    "function `{}` expects input of implicit type `{}`, but `{}` has type `{}`",
                    f_src.port, sig.input, d_src.port, tag
                );
                out.push(mismatch(
                    graph,
                    ports,
                    "W-type-mismatch",
                    b,
                    1,
                    message,
                    tag,
                    &sig.input,
                ));
            }
        }
        "compose" => {
            let (Some((f, f_src)), Some((g, g_src))) = (input(0), input(1)) else {
                return;
            };
            let (Some(first), Some(then)) = (f.signature(), g.signature()) else {
                return;
            };
            if !classes.equivalent(&first.output, &then.input) {
                let message = format!(
                    "`{}` produces implicit type `{}`, but `{}` expects `{}`",
                    f_src.port, first.output, g_src.port, then.input
                );
                out.push(mismatch(
                    graph,
                    ports,
                    "W-compose-mismatch",
                    b,
                    1,
                    message,
                    &first.output,
                    &then.input,
                ));
            }
        }
        "score" => {
            let (Some((a, a_src)), Some((p, p_src))) = (input(0), input(1)) else {
                return;
            };
            let (Some(actual), Some(predicted)) = (a.tag(), p.tag()) else {
                return;
            };
            if !classes.equivalent(actual, predicted) {
                let message = format!(
                    "comparing `{}` of implicit type `{}` with `{}` of type `{}`",
                    a_src.port, actual, p_src.port, predicted
                );
                out.push(mismatch(
                    graph,
                    ports,
                    "W-score-mismatch",
                    b,
                    1,
                    message,
                    predicted,
                    actual,
                ));
            }
        }
        _ => {}
    }
}

#[allow(clippy::too_many_arguments)]
fn mismatch(
    graph: &PipelineGraph,
    ports: &BTreeMap<PortRef, PortType>,
    code: &str,
    b: &BoxSpec,
    slot: usize,
    message: String,
    found: &TypeTag,
    expected: &TypeTag,
) -> Diagnostic {
    let anchors = match (anchor_for(graph, ports, found), anchor_for(graph, ports, expected)) {
        (Some(l), Some(r)) => Some(Override(l, r)),
        _ => None,
    };
    let mut d = Diagnostic::warning(
        code,
        Locus::of_port(b.id.clone(), b.in_ports[slot].name.clone()),
        message,
    );
    d.suggested_override = Some(SuggestedOverride {
        left: found.clone(),
        right: expected.clone(),
        anchors,
    });
    d
}

/// First data output port, in file order, carrying exactly this tag.
fn anchor_for(graph: &PipelineGraph, ports: &BTreeMap<PortRef, PortType>, tag: &TypeTag) -> Option<PortRef> {
    graph.boxes.iter().find_map(|b| {
        b.out_ports.iter().find_map(|p| {
            let r = PortRef::new(b.id.clone(), p.name.clone());
            (ports.get(&r)?.tag()? == tag).then_some(r)
        })
    })
}
