// SPDX-License-Identifier: Apache-2.0

//! Design-time phase: precompute, for every node, the replacements of every
//! fragment anchored there.

use std::cmp::Ordering;
use std::collections::hash_map::Entry;
use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::fragment::{anchored_sets, induced, interface_of, resolve, to_fragment};
use crate::matching::{aggregate_qos, find_replacement_graphs, Candidate, MatchDegree, ReplacementGraph, SearchParams};
use crate::model::{validate_graph, CompositeGraph, Fragment, NodeId, ServiceId, Taxonomy};
use crate::registry::Registry;
use crate::topology::{bits, Mask, Topology};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanConfig {
    pub epsilon: f64,
    /// Largest fragment considered; `None` means any size.
    pub max_fragment_size: Option<usize>,
    /// Largest replacement graph searched for.
    pub max_replacement_size: usize,
    pub strict_exact: bool,
}

impl Default for PlanConfig {
    fn default() -> Self {
        Self { epsilon: 0.2, max_fragment_size: None, max_replacement_size: 3, strict_exact: false }
    }
}

impl PlanConfig {
    pub fn search_params(&self) -> SearchParams {
        SearchParams {
            epsilon: self.epsilon,
            max_size: self.max_replacement_size,
            strict_exact: self.strict_exact,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanEntry {
    pub fragment: Fragment,
    pub replacement: ReplacementGraph,
    pub degree: MatchDegree,
    pub distance: f64,
}

impl PlanEntry {
    fn rank(&self, other: &Self) -> Ordering {
        self.fragment
            .len()
            .cmp(&other.fragment.len())
            .then(self.degree.cmp(&other.degree))
            .then(self.distance.total_cmp(&other.distance))
            .then_with(|| self.replacement.canonical_id().cmp(other.replacement.canonical_id()))
            .then_with(|| self.fragment.nodes.cmp(&other.fragment.nodes))
    }
}

/// Ordered replacement candidates for every node of one graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryPlan {
    pub graph: String,
    pub config: PlanConfig,
    pub entries: BTreeMap<NodeId, Vec<PlanEntry>>,
}

impl RecoveryPlan {
    pub fn entry_count(&self) -> usize {
        self.entries.values().map(Vec::len).sum()
    }
}

/// Builds the plan for `graph`: every anchored fragment of every node, each
/// with the replacements [`find_replacement_graphs`] finds for its interface
/// and its own aggregate QoS, the fragment's services excluded.
///
/// Entries per node are ordered smallest fragment first, then by match
/// degree, QoS distance and replacement id.
pub fn build_plan(
    graph: &CompositeGraph,
    registry: &Registry,
    taxonomy: &Taxonomy,
    config: &PlanConfig,
) -> Result<RecoveryPlan> {
    let violations = validate_graph(graph, registry, taxonomy);
    if !violations.is_empty() {
        let list: Vec<String> = violations.iter().map(ToString::to_string).collect();
        return Err(invalid(format!("graph {} is invalid: {}", graph.id, list.join("; "))));
    }
    if config.max_fragment_size == Some(0) || config.max_replacement_size == 0 {
        return Err(invalid("fragment and replacement sizes must be positive"));
    }
    let topo = Topology::new(graph)?;
    let bound = resolve(&topo, graph, registry)?;
    let params = config.search_params();

    // A fragment is anchored at each of its nodes; search it once.
    let mut searched: HashMap<Mask, Vec<Candidate>> = HashMap::new();
    let mut entries = BTreeMap::new();
    for anchor in 0..topo.len() {
        let mut list = Vec::new();
        for set in anchored_sets(&topo, anchor, config.max_fragment_size) {
            if let Entry::Vacant(slot) = searched.entry(set) {
                let iface = interface_of(&topo, graph, &bound, set, taxonomy);
                let target = aggregate_qos(&induced(&topo, graph, set, &iface), registry)?;
                let exclude: BTreeSet<ServiceId> = bits(set).map(|i| bound[i].id.clone()).collect();
                let found = find_replacement_graphs(&iface, target, registry, taxonomy, &params, &exclude);
                slot.insert(found);
            }
            let fragment = to_fragment(&topo, graph, anchor, set);
            list.extend(searched[&set].iter().map(|c| PlanEntry {
                fragment: fragment.clone(),
                replacement: c.replacement.clone(),
                degree: c.degree,
                distance: c.distance,
            }));
        }
        list.sort_by(PlanEntry::rank);
        entries.insert(topo.ids[anchor].clone(), list);
    }
    Ok(RecoveryPlan { graph: graph.id.clone(), config: *config, entries })
}

/// The precomputed entries for a failed node. Pure lookup: no search, no
/// enumeration.
pub fn plan_lookup<'p>(plan: &'p RecoveryPlan, failed: &str) -> Result<&'p [PlanEntry]> {
    plan.entries
        .get(failed)
        .map(Vec::as_slice)
        .ok_or_else(|| invalid(format!("node {failed} is not part of graph {}", plan.graph)))
}
