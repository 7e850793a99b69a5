// SPDX-License-Identifier: Apache-2.0

//! Run-time phase: splice a precomputed replacement in place of a fragment
//! containing the failed node.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fragment::{interface_of, resolve};
use crate::matching::{match_degree, MatchDegree, ReplacementGraph};
use crate::model::{validate_graph, AtomicService, CompositeGraph, Fragment, NodeId, Taxonomy};
use crate::planner::{plan_lookup, PlanEntry, RecoveryPlan};
use crate::registry::Registry;
use crate::topology::{bit, bits, Mask, Topology};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Replace the failed service alone with one similar service.
    Atomic,
    /// Replace any planned fragment containing the failed service.
    Composite,
}

impl Strategy {
    pub const ALL: [Strategy; 2] = [Strategy::Atomic, Strategy::Composite];

    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Atomic => "atomic",
            Strategy::Composite => "composite",
        }
    }

    fn admits(&self, entry: &PlanEntry, failed: &str) -> bool {
        match self {
            Strategy::Atomic => entry.fragment.is_singleton_of(failed) && entry.replacement.order() == 1,
            Strategy::Composite => entry.fragment.contains(failed),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "atomic" => Ok(Strategy::Atomic),
            "composite" => Ok(Strategy::Composite),
            other => Err(Error::InvalidParams(format!("unknown strategy {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum RecoveryOutcome {
    Recovered { graph: CompositeGraph, entry: PlanEntry },
    Unrecovered,
}

impl RecoveryOutcome {
    pub fn is_recovered(&self) -> bool {
        matches!(self, RecoveryOutcome::Recovered { .. })
    }
}

/// Replaces `fragment` in `graph` by `replacement`.
///
/// Replacement nodes get fresh ids. Each replacement input that is not
/// produced inside the replacement is wired to a surviving producer,
/// preferring nodes that fed the removed fragment, then graph inputs, then
/// any other upstream node (by id). Each surviving node left with an
/// unsatisfied input is wired from the replacement node producing it, or
/// failing that from one of its former ancestors. The result must pass
/// [`validate_graph`], otherwise the splice fails.
pub fn apply_replacement(
    graph: &CompositeGraph,
    fragment: &Fragment,
    replacement: &ReplacementGraph,
    registry: &Registry,
    taxonomy: &Taxonomy,
) -> Result<CompositeGraph> {
    if fragment.graph != graph.id || !fragment.contains(&fragment.anchor) {
        return Err(invalid("fragment does not belong to this graph"));
    }
    let topo = Topology::new(graph)?;
    let set = topo.mask_of(&fragment.nodes)?;
    if !topo.is_weakly_connected(set) || !topo.is_convex(set) {
        return Err(invalid("fragment is not connected and convex"));
    }
    let bound = resolve(&topo, graph, registry)?;
    let required = interface_of(&topo, graph, &bound, set, taxonomy);
    let degree = match_degree(&required, &replacement.interface(), taxonomy);
    if degree == MatchDegree::Fail {
        return Err(Error::Precondition(format!(
            "replacement {} does not match the fragment interface",
            replacement.canonical_id()
        )));
    }
    splice(graph, &topo, &bound, set, replacement, registry, taxonomy)
}

fn splice(
    graph: &CompositeGraph,
    topo: &Topology<'_>,
    bound: &[&AtomicService],
    set: Mask,
    replacement: &ReplacementGraph,
    registry: &Registry,
    taxonomy: &Taxonomy,
) -> Result<CompositeGraph> {
    let spliced = |msg: String| Error::Splice(format!("{} into {}: {msg}", replacement.canonical_id(), graph.id));
    let downstream = topo.union_of(&topo.desc, set) & !set;
    let feeders = topo.union_of(&topo.pred, set) & !set;
    let survivors = topo.all() & !set;

    let mut out = CompositeGraph {
        id: graph.id.clone(),
        nodes: BTreeMap::new(),
        edges: BTreeSet::new(),
        inputs: graph.inputs.clone(),
        outputs: graph.outputs.clone(),
    };
    for i in bits(survivors) {
        out.nodes.insert(topo.ids[i].clone(), bound[i].id.clone());
        for s in bits(topo.succ[i] & survivors) {
            out.edges.insert((topo.ids[i].clone(), topo.ids[s].clone()));
        }
    }

    // Fresh ids: never reuse any id of the host, removed nodes included.
    let mut renamed: BTreeMap<&NodeId, NodeId> = BTreeMap::new();
    for (rid, sid) in &replacement.graph.nodes {
        let mut fresh = rid.clone();
        let mut k = 1;
        while graph.nodes.contains_key(&fresh) || out.nodes.contains_key(&fresh) {
            fresh = NodeId::from(format!("{rid}@{k}"));
            k += 1;
        }
        out.nodes.insert(fresh.clone(), sid.clone());
        renamed.insert(rid, fresh);
    }
    for (t, h) in &replacement.graph.edges {
        match (renamed.get(t), renamed.get(h)) {
            (Some(t), Some(h)) => {
                out.edges.insert((t.clone(), h.clone()));
            }
            _ => return Err(spliced(format!("replacement edge {t} -> {h} is dangling"))),
        }
    }
    let rtopo = Topology::new(&replacement.graph).map_err(|e| spliced(e.to_string()))?;
    let rservices: Vec<&AtomicService> = rtopo
        .ids
        .iter()
        .map(|n| {
            let sid = &replacement.graph.nodes[*n];
            registry.get(sid).ok_or_else(|| spliced(format!("unknown service {sid}")))
        })
        .collect::<Result<_>>()?;

    // Inputs of the replacement, from upstream of the removed fragment.
    // Anything downstream of the fragment is off limits: it would close a
    // cycle through the replacement.
    for r in 0..rtopo.len() {
        let inside = rtopo.anc[r];
        for c in &rservices[r].inputs {
            if bits(inside).any(|a| taxonomy.any_subsumes(&rservices[a].outputs, c)) {
                continue;
            }
            let producer = |pool: Mask| bits(pool).find(|&p| taxonomy.any_subsumes(&bound[p].outputs, c));
            let upstream = survivors & !downstream;
            let from = match producer(feeders & upstream) {
                Some(p) => Some(p),
                None if taxonomy.any_subsumes(&graph.inputs, c) => None,
                None => match producer(upstream & !feeders) {
                    Some(p) => Some(p),
                    None => return Err(spliced(format!("no producer for input {c}"))),
                },
            };
            if let Some(p) = from {
                out.edges.insert((topo.ids[p].clone(), renamed[rtopo.ids[r]].clone()));
            }
        }
    }

    // Surviving nodes that lost a producer, in topological order so that
    // ancestors are settled first.
    let rnodes: Vec<(&NodeId, &AtomicService)> =
        rtopo.ids.iter().zip(&rservices).map(|(id, s)| (&renamed[*id], *s)).collect();
    for &w in &topo.topo {
        if set & bit(w) != 0 {
            continue;
        }
        let wid = topo.ids[w];
        for c in &bound[w].inputs {
            if taxonomy.any_subsumes(&graph.inputs, c) {
                continue;
            }
            let ancestors = ancestors_in(&out, wid);
            let fed = ancestors.iter().any(|a| {
                let sid = &out.nodes[*a];
                registry.get(sid).is_some_and(|s| taxonomy.any_subsumes(&s.outputs, c))
            });
            if fed {
                continue;
            }
            let from = rnodes
                .iter()
                .find(|(_, s)| taxonomy.any_subsumes(&s.outputs, c))
                .map(|(id, _)| (*id).clone())
                .or_else(|| {
                    bits(topo.anc[w] & survivors)
                        .find(|&p| taxonomy.any_subsumes(&bound[p].outputs, c))
                        .map(|p| topo.ids[p].clone())
                });
            match from {
                Some(p) => {
                    out.edges.insert((p, wid.clone()));
                }
                None => return Err(spliced(format!("nothing left produces {c} for node {wid}"))),
            }
        }
    }

    let violations = validate_graph(&out, registry, taxonomy);
    if !violations.is_empty() {
        let list: Vec<String> = violations.iter().map(ToString::to_string).collect();
        return Err(spliced(list.join("; ")));
    }
    Ok(out)
}

fn ancestors_in<'g>(graph: &'g CompositeGraph, node: &NodeId) -> BTreeSet<&'g NodeId> {
    let mut preds: BTreeMap<&NodeId, Vec<&NodeId>> = BTreeMap::new();
    for (t, h) in &graph.edges {
        preds.entry(h).or_default().push(t);
    }
    let mut seen = BTreeSet::new();
    let mut stack = vec![node];
    while let Some(n) = stack.pop() {
        for &p in preds.get(n).map_or(&[][..], Vec::as_slice) {
            if seen.insert(p) {
                stack.push(p);
            }
        }
    }
    seen
}

/// Recovers from the failure of `failed` using only the precomputed plan.
///
/// The plan entries admitted by `strategy` are tried in plan order and the
/// first one that splices cleanly wins. Under [`Strategy::Atomic`] only
/// single-service replacements of `{failed}` are admitted; under
/// [`Strategy::Composite`] every entry whose fragment contains `failed`.
pub fn recover(
    graph: &CompositeGraph,
    failed: &str,
    plan: &RecoveryPlan,
    strategy: Strategy,
    registry: &Registry,
    taxonomy: &Taxonomy,
) -> Result<RecoveryOutcome> {
    if plan.graph != graph.id {
        return Err(invalid(format!("plan was built for graph {}, not {}", plan.graph, graph.id)));
    }
    if !graph.nodes.contains_key(failed) {
        return Err(invalid(format!("node {failed} is not part of graph {}", graph.id)));
    }
    let entries = plan_lookup(plan, failed)?;
    let admitted: Vec<&PlanEntry> = entries.iter().filter(|e| strategy.admits(e, failed)).collect();
    if admitted.is_empty() {
        return Ok(RecoveryOutcome::Unrecovered);
    }
    let topo = Topology::new(graph)?;
    let bound = resolve(&topo, graph, registry)?;
    for entry in admitted {
        let set = topo.mask_of(&entry.fragment.nodes)?;
        if let Ok(recovered) = splice(graph, &topo, &bound, set, &entry.replacement, registry, taxonomy) {
            return Ok(RecoveryOutcome::Recovered { graph: recovered, entry: entry.clone() });
        }
    }
    Ok(RecoveryOutcome::Unrecovered)
}
