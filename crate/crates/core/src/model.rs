// SPDX-License-Identifier: Apache-2.0

//! Concepts, services, composite graphs and fragments.
//!
//! Every type here is a plain value. Graphs are not validated on
//! construction; [`validate_graph`] reports what is wrong with one, and the
//! operations that need a well-formed graph reject malformed input with
//! [`Error::InvalidInput`].

use std::borrow::Borrow;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

macro_rules! symbol {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(Arc<str>);

        impl $name {
            pub fn new(id: impl AsRef<str>) -> Self {
                Self(Arc::from(id.as_ref()))
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                fmt::Debug::fmt(&*self.0, f)
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(id: &str) -> Self {
                Self::new(id)
            }
        }

        impl From<String> for $name {
            fn from(id: String) -> Self {
                Self(Arc::from(id))
            }
        }

        impl std::ops::Deref for $name {
            type Target = str;

            fn deref(&self) -> &str {
                &self.0
            }
        }

        impl AsRef<str> for $name {
            fn as_ref(&self) -> &str {
                &self.0
            }
        }

        impl Borrow<str> for $name {
            fn borrow(&self) -> &str {
                &self.0
            }
        }
    };
}

symbol!(
    /// Identifier of a semantic concept in a [`Taxonomy`].
    ConceptId
);
symbol!(
    /// Identifier of an [`AtomicService`] in a registry.
    ServiceId
);
symbol!(
    /// Identifier of a node inside a [`CompositeGraph`]. Independent of the
    /// service bound to the node.
    NodeId
);

pub type ConceptSet = BTreeSet<ConceptId>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Concept {
    pub id: ConceptId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<ConceptId>,
}

impl Concept {
    pub fn root(id: impl Into<ConceptId>) -> Self {
        Self { id: id.into(), parent: None }
    }

    pub fn child(id: impl Into<ConceptId>, parent: impl Into<ConceptId>) -> Self {
        Self { id: id.into(), parent: Some(parent.into()) }
    }
}

/// A forest of concepts. A concept satisfies a requirement for itself and
/// for every one of its ancestors.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Concept>", into = "Vec<Concept>")]
pub struct Taxonomy {
    parents: BTreeMap<ConceptId, Option<ConceptId>>,
}

impl Taxonomy {
    /// Builds a taxonomy from concepts given in any order.
    pub fn new(concepts: impl IntoIterator<Item = Concept>) -> Result<Self> {
        let mut parents = BTreeMap::new();
        for c in concepts {
            if parents.insert(c.id.clone(), c.parent).is_some() {
                return Err(invalid(format!("duplicate concept {}", c.id)));
            }
        }
        for (id, parent) in &parents {
            if let Some(p) = parent {
                if !parents.contains_key(p) {
                    return Err(invalid(format!("concept {id} has unknown parent {p}")));
                }
            }
        }
        let taxonomy = Self { parents };
        for id in taxonomy.parents.keys() {
            let steps = taxonomy.ancestors_or_self(id).take(taxonomy.len() + 1).count();
            if steps > taxonomy.len() {
                return Err(invalid(format!("parent chain of {id} is cyclic")));
            }
        }
        Ok(taxonomy)
    }

    /// Adds a concept whose parent (if any) is already present.
    pub fn insert(&mut self, concept: Concept) -> Result<()> {
        if self.parents.contains_key(&concept.id) {
            return Err(invalid(format!("duplicate concept {}", concept.id)));
        }
        if let Some(p) = &concept.parent {
            if !self.parents.contains_key(p) {
                return Err(invalid(format!("concept {} has unknown parent {p}", concept.id)));
            }
        }
        self.parents.insert(concept.id, concept.parent);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.parents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parents.is_empty()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.parents.contains_key(id)
    }

    pub fn parent(&self, id: &str) -> Option<&ConceptId> {
        self.parents.get(id).and_then(Option::as_ref)
    }

    /// Concepts in id order.
    pub fn concepts(&self) -> impl Iterator<Item = Concept> + '_ {
        self.parents
            .iter()
            .map(|(id, parent)| Concept { id: id.clone(), parent: parent.clone() })
    }

    pub fn ids(&self) -> impl Iterator<Item = &ConceptId> + '_ {
        self.parents.keys()
    }

    /// Number of concepts on the chain from `id` up to its root, inclusive.
    pub fn depth(&self, id: &str) -> Option<usize> {
        self.contains(id).then(|| self.ancestors_or_self(id).count())
    }

    /// Walks from `id` up to its root. Empty for unknown ids.
    pub fn ancestors_or_self<'t>(&'t self, id: &str) -> impl Iterator<Item = &'t ConceptId> + 't {
        let start = self.parents.get_key_value(id).map(|(k, _)| k);
        std::iter::successors(start, move |c| self.parent(c))
    }

    /// Returns whether a concept `available` can be used where `required` is
    /// expected: equal, or `available` is a descendant of `required`.
    pub fn satisfies(&self, available: &str, required: &str) -> Result<bool> {
        for id in [available, required] {
            if !self.contains(id) {
                return Err(invalid(format!("unknown concept {id}")));
            }
        }
        Ok(self.subsumes(available, required))
    }

    /// Infallible form of [`Taxonomy::satisfies`]: unknown ids only satisfy
    /// themselves.
    pub(crate) fn subsumes(&self, available: &str, required: &str) -> bool {
        available == required || self.ancestors_or_self(available).any(|a| a.as_str() == required)
    }

    /// True if some concept of `available` satisfies `required`.
    pub(crate) fn any_subsumes<'a>(
        &self,
        available: impl IntoIterator<Item = &'a ConceptId>,
        required: &str,
    ) -> bool {
        available.into_iter().any(|a| self.subsumes(a, required))
    }
}

impl TryFrom<Vec<Concept>> for Taxonomy {
    type Error = Error;

    fn try_from(concepts: Vec<Concept>) -> Result<Self> {
        Self::new(concepts)
    }
}

impl From<Taxonomy> for Vec<Concept> {
    fn from(t: Taxonomy) -> Self {
        t.concepts().collect()
    }
}

/// Execution time in milliseconds and cost in abstract currency units.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "QosWire", into = "QosWire")]
pub struct QoS {
    pub exec_time_ms: f64,
    pub cost: f64,
}

impl QoS {
    pub fn new(exec_time_ms: f64, cost: f64) -> Result<Self> {
        let q = Self { exec_time_ms, cost };
        q.check()?;
        Ok(q)
    }

    fn check(&self) -> Result<()> {
        for (name, v) in [("time", self.exec_time_ms), ("cost", self.cost)] {
            if !v.is_finite() || v < 0.0 {
                return Err(invalid(format!("QoS {name} must be finite and non-negative, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct QosWire {
    time_ms: f64,
    cost: f64,
}

impl TryFrom<QosWire> for QoS {
    type Error = Error;

    fn try_from(w: QosWire) -> Result<Self> {
        QoS::new(w.time_ms, w.cost)
    }
}

impl From<QoS> for QosWire {
    fn from(q: QoS) -> Self {
        Self { time_ms: q.exec_time_ms, cost: q.cost }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomicService {
    pub id: ServiceId,
    pub inputs: ConceptSet,
    pub outputs: ConceptSet,
    pub qos: QoS,
}

impl AtomicService {
    pub fn new<I, O>(id: impl Into<ServiceId>, inputs: I, outputs: O, qos: QoS) -> Self
    where
        I: IntoIterator,
        I::Item: Into<ConceptId>,
        O: IntoIterator,
        O::Item: Into<ConceptId>,
    {
        Self {
            id: id.into(),
            inputs: inputs.into_iter().map(Into::into).collect(),
            outputs: outputs.into_iter().map(Into::into).collect(),
            qos,
        }
    }

    /// The service seen as a one-node fragment with every output exposed.
    pub fn interface(&self) -> Interface {
        Interface {
            required_inputs: self.inputs.clone(),
            provided_outputs: self.outputs.clone(),
        }
    }
}

/// Anything that resolves service ids.
pub trait ServiceLookup {
    fn service(&self, id: &ServiceId) -> Option<&AtomicService>;
}

impl ServiceLookup for BTreeMap<ServiceId, AtomicService> {
    fn service(&self, id: &ServiceId) -> Option<&AtomicService> {
        self.get(id)
    }
}

impl ServiceLookup for HashMap<ServiceId, AtomicService> {
    fn service(&self, id: &ServiceId) -> Option<&AtomicService> {
        self.get(id)
    }
}

impl<L: ServiceLookup + ?Sized> ServiceLookup for &L {
    fn service(&self, id: &ServiceId) -> Option<&AtomicService> {
        (**self).service(id)
    }
}

/// A composite service: nodes bound to atomic services plus dependency
/// edges (`tail` completes before `head`). Dataflow is not stored; it is
/// recomputed from the services' interfaces.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "GraphWire", into = "GraphWire")]
pub struct CompositeGraph {
    pub id: String,
    pub nodes: BTreeMap<NodeId, ServiceId>,
    pub edges: BTreeSet<(NodeId, NodeId)>,
    pub inputs: ConceptSet,
    pub outputs: ConceptSet,
}

impl CompositeGraph {
    pub fn new(id: impl Into<String>) -> Self {
        Self { id: id.into(), ..Self::default() }
    }

    pub fn with_node(mut self, node: impl Into<NodeId>, service: impl Into<ServiceId>) -> Self {
        self.nodes.insert(node.into(), service.into());
        self
    }

    pub fn with_edge(mut self, tail: impl Into<NodeId>, head: impl Into<NodeId>) -> Self {
        self.edges.insert((tail.into(), head.into()));
        self
    }

    pub fn with_inputs<I: IntoIterator<Item = C>, C: Into<ConceptId>>(mut self, inputs: I) -> Self {
        self.inputs.extend(inputs.into_iter().map(Into::into));
        self
    }

    pub fn with_outputs<I: IntoIterator<Item = C>, C: Into<ConceptId>>(mut self, outputs: I) -> Self {
        self.outputs.extend(outputs.into_iter().map(Into::into));
        self
    }

    /// Number of nodes.
    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn service_of(&self, node: &str) -> Option<&ServiceId> {
        self.nodes.get(node)
    }
}

#[derive(Serialize, Deserialize)]
struct GraphWire {
    id: String,
    nodes: Vec<NodeWire>,
    edges: Vec<(NodeId, NodeId)>,
    inputs: Vec<ConceptId>,
    outputs: Vec<ConceptId>,
}

#[derive(Serialize, Deserialize)]
struct NodeWire {
    node: NodeId,
    service: ServiceId,
}

impl TryFrom<GraphWire> for CompositeGraph {
    type Error = Error;

    fn try_from(w: GraphWire) -> Result<Self> {
        let mut nodes = BTreeMap::new();
        for n in w.nodes {
            if nodes.insert(n.node.clone(), n.service).is_some() {
                return Err(invalid(format!("graph {}: duplicate node {}", w.id, n.node)));
            }
        }
        Ok(Self {
            id: w.id,
            nodes,
            edges: w.edges.into_iter().collect(),
            inputs: w.inputs.into_iter().collect(),
            outputs: w.outputs.into_iter().collect(),
        })
    }
}

impl From<CompositeGraph> for GraphWire {
    fn from(g: CompositeGraph) -> Self {
        Self {
            id: g.id,
            nodes: g
                .nodes
                .into_iter()
                .map(|(node, service)| NodeWire { node, service })
                .collect(),
            edges: g.edges.into_iter().collect(),
            inputs: g.inputs.into_iter().collect(),
            outputs: g.outputs.into_iter().collect(),
        }
    }
}

/// A non-empty, weakly connected, convex node subset of a host graph,
/// anchored at a (potentially failed) node.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Fragment {
    pub graph: String,
    pub anchor: NodeId,
    pub nodes: BTreeSet<NodeId>,
}

impl Fragment {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, node: &str) -> bool {
        self.nodes.contains(node)
    }

    pub fn is_singleton_of(&self, node: &str) -> bool {
        self.nodes.len() == 1 && self.contains(node)
    }
}

/// What a fragment (or a candidate replacement) needs from, and exposes to,
/// the rest of the composition.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Interface {
    pub required_inputs: ConceptSet,
    pub provided_outputs: ConceptSet,
}

impl Interface {
    pub fn new<I, O>(inputs: I, outputs: O) -> Self
    where
        I: IntoIterator,
        I::Item: Into<ConceptId>,
        O: IntoIterator,
        O::Item: Into<ConceptId>,
    {
        Self {
            required_inputs: inputs.into_iter().map(Into::into).collect(),
            provided_outputs: outputs.into_iter().map(Into::into).collect(),
        }
    }
}

/// A single broken [`CompositeGraph`] invariant.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Violation {
    Empty,
    DanglingEdge { tail: NodeId, head: NodeId },
    /// Nodes that lie on, or behind, a directed cycle.
    Cycle { nodes: Vec<NodeId> },
    UnknownService { node: NodeId, service: ServiceId },
    UnknownConcept { concept: ConceptId },
    DataflowGap { node: NodeId, concept: ConceptId },
    UndeclaredOutput { concept: ConceptId },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Empty => write!(f, "graph has no nodes"),
            Violation::DanglingEdge { tail, head } => {
                write!(f, "edge {tail} -> {head} references an undeclared node")
            }
            Violation::Cycle { nodes } => {
                let names: Vec<_> = nodes.iter().map(NodeId::as_str).collect();
                write!(f, "cycle through {}", names.join(", "))
            }
            Violation::UnknownService { node, service } => {
                write!(f, "node {node} is bound to unknown service {service}")
            }
            Violation::UnknownConcept { concept } => write!(f, "unknown concept {concept}"),
            Violation::DataflowGap { node, concept } => {
                write!(f, "input {concept} of node {node} is produced by no ancestor or graph input")
            }
            Violation::UndeclaredOutput { concept } => {
                write!(f, "graph output {concept} is produced by no node or graph input")
            }
        }
    }
}

/// Lists every violated graph invariant; an empty list means the graph is
/// valid. Dataflow is only checked on acyclic graphs.
pub fn validate_graph(
    graph: &CompositeGraph,
    services: &impl ServiceLookup,
    taxonomy: &Taxonomy,
) -> Vec<Violation> {
    let mut out = Vec::new();
    if graph.nodes.is_empty() {
        out.push(Violation::Empty);
    }
    for (tail, head) in &graph.edges {
        if !graph.nodes.contains_key(tail) || !graph.nodes.contains_key(head) {
            out.push(Violation::DanglingEdge { tail: tail.clone(), head: head.clone() });
        }
    }
    let mut unknown_service = false;
    for (node, sid) in &graph.nodes {
        match services.service(sid) {
            None => {
                unknown_service = true;
                out.push(Violation::UnknownService { node: node.clone(), service: sid.clone() });
            }
            Some(s) => {
                for c in s.inputs.iter().chain(&s.outputs) {
                    if !taxonomy.contains(c) {
                        out.push(Violation::UnknownConcept { concept: c.clone() });
                    }
                }
            }
        }
    }
    for c in graph.inputs.iter().chain(&graph.outputs) {
        if !taxonomy.contains(c) {
            out.push(Violation::UnknownConcept { concept: c.clone() });
        }
    }

    let ids: Vec<&NodeId> = graph.nodes.keys().collect();
    let index: HashMap<&str, usize> = ids.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); ids.len()];
    let mut succs: Vec<Vec<usize>> = vec![Vec::new(); ids.len()];
    for (tail, head) in &graph.edges {
        if let (Some(&t), Some(&h)) = (index.get(tail.as_str()), index.get(head.as_str())) {
            preds[h].push(t);
            succs[t].push(h);
        }
    }

    // Kahn: whatever is never released lies on or behind a cycle.
    let mut indegree: Vec<usize> = preds.iter().map(Vec::len).collect();
    let mut ready: Vec<usize> = (0..ids.len()).filter(|&i| indegree[i] == 0).collect();
    let mut released = 0;
    while let Some(n) = ready.pop() {
        released += 1;
        for &s in &succs[n] {
            indegree[s] -= 1;
            if indegree[s] == 0 {
                ready.push(s);
            }
        }
    }
    if released < ids.len() {
        let nodes = (0..ids.len()).filter(|&i| indegree[i] > 0).map(|i| ids[i].clone()).collect();
        out.push(Violation::Cycle { nodes });
    } else if !unknown_service {
        for (i, node) in ids.iter().enumerate() {
            let service = &services.service(&graph.nodes[*node]).expect("checked above");
            let ancestors = reachable(&preds, i);
            for c in &service.inputs {
                let fed = taxonomy.any_subsumes(&graph.inputs, c)
                    || ancestors.iter().any(|&a| {
                        let s = services.service(&graph.nodes[ids[a]]).expect("checked above");
                        taxonomy.any_subsumes(&s.outputs, c)
                    });
                if !fed {
                    out.push(Violation::DataflowGap { node: (*node).clone(), concept: c.clone() });
                }
            }
        }
    }
    if !unknown_service {
        for g in &graph.outputs {
            let produced = taxonomy.any_subsumes(&graph.inputs, g)
                || graph.nodes.values().any(|sid| {
                    let s = services.service(sid).expect("checked above");
                    taxonomy.any_subsumes(&s.outputs, g)
                });
            if !produced {
                out.push(Violation::UndeclaredOutput { concept: g.clone() });
            }
        }
    }
    out
}

/// Nodes reachable from `start` along `adj`, excluding `start` itself.
fn reachable(adj: &[Vec<usize>], start: usize) -> Vec<usize> {
    let mut seen = vec![false; adj.len()];
    let mut stack = vec![start];
    let mut out = Vec::new();
    while let Some(n) = stack.pop() {
        for &m in &adj[n] {
            if !seen[m] {
                seen[m] = true;
                out.push(m);
                stack.push(m);
            }
        }
    }
    out
}
