// SPDX-License-Identifier: Apache-2.0

//! Fragments of a composite graph around a potential failure point.
//!
//! A fragment is a node subset that contains its anchor, is weakly connected
//! and is convex: no directed path leaves the subset and re-enters it.
//! Convexity is what makes removing the subset and splicing in a
//! replacement safe; without it the splice can close a cycle through a
//! surviving node.

use std::collections::BTreeSet;

use crate::error::{invalid, Result};
use crate::instrument;
use crate::model::{AtomicService, CompositeGraph, Fragment, Interface, NodeId, ServiceLookup, Taxonomy};
use crate::topology::{bit, bits, Mask, Topology};

/// True iff no directed path between two members of `nodes` passes through
/// a non-member.
pub fn is_convex(graph: &CompositeGraph, nodes: &BTreeSet<NodeId>) -> Result<bool> {
    if nodes.is_empty() {
        return Err(invalid("empty node set"));
    }
    let topo = Topology::new(graph)?;
    let set = topo.mask_of(nodes)?;
    Ok(topo.is_convex(set))
}

/// Every convex, weakly connected node subset containing `anchor` with at
/// most `max_size` nodes (`None` for no bound), ordered by size and then by
/// node ids. The singleton `{anchor}` always comes first.
pub fn enumerate_fragments(
    graph: &CompositeGraph,
    anchor: &NodeId,
    max_size: Option<usize>,
) -> Result<Vec<Fragment>> {
    if max_size == Some(0) {
        return Err(invalid("max_size must be positive"));
    }
    let topo = Topology::new(graph)?;
    let a = topo
        .index(anchor)
        .ok_or_else(|| invalid(format!("unknown anchor {anchor}")))?;
    Ok(anchored_sets(&topo, a, max_size)
        .into_iter()
        .map(|m| to_fragment(&topo, graph, a, m))
        .collect())
}

pub(crate) fn to_fragment(topo: &Topology<'_>, graph: &CompositeGraph, anchor: usize, set: Mask) -> Fragment {
    Fragment {
        graph: graph.id.clone(),
        anchor: topo.ids[anchor].clone(),
        nodes: bits(set).map(|i| topo.ids[i].clone()).collect(),
    }
}

/// Masks of the anchored fragments, already in canonical order.
pub(crate) fn anchored_sets(topo: &Topology<'_>, anchor: usize, max_size: Option<usize>) -> Vec<Mask> {
    instrument::enumeration();
    let limit = max_size.unwrap_or(usize::MAX);
    let mut found = Vec::new();
    grow(topo, bit(anchor), topo.neighbours(anchor), 0, limit, &mut found);
    found.retain(|&m| topo.is_convex(m));
    sort_canonical(&mut found);
    found
}

/// Enumerates each connected superset of `set` exactly once: `ext` holds the
/// candidates still allowed to join, `banned` the ones already branched on.
fn grow(topo: &Topology<'_>, set: Mask, ext: Mask, banned: Mask, limit: usize, out: &mut Vec<Mask>) {
    out.push(set);
    if set.count_ones() as usize >= limit {
        return;
    }
    let mut ext = ext;
    let mut banned = banned;
    while ext != 0 {
        let v = ext.trailing_zeros() as usize;
        ext &= !bit(v);
        let next = set | bit(v);
        let fresh = topo.neighbours(v) & !next & !ext & !banned;
        grow(topo, next, ext | fresh, banned, limit, out);
        banned |= bit(v);
    }
}

/// Size first, then lexicographic on the sorted node ids. Node indices
/// follow id order, so comparing index sequences is enough.
pub(crate) fn sort_canonical(sets: &mut [Mask]) {
    sets.sort_by(|a, b| {
        a.count_ones()
            .cmp(&b.count_ones())
            .then_with(|| bits(*a).cmp(bits(*b)))
    });
}

/// External interface of a fragment.
///
/// Required inputs are the members' inputs that no member ancestor inside
/// the fragment can satisfy. Provided outputs are the members' outputs that
/// some downstream node outside the fragment consumes, or that satisfy a
/// declared graph output. Intermediates used only inside the fragment are
/// dropped.
pub fn fragment_interface(
    graph: &CompositeGraph,
    fragment: &Fragment,
    services: &impl ServiceLookup,
    taxonomy: &Taxonomy,
) -> Result<Interface> {
    if fragment.graph != graph.id {
        return Err(invalid(format!(
            "fragment belongs to graph {}, not {}",
            fragment.graph, graph.id
        )));
    }
    if !fragment.nodes.contains(&fragment.anchor) {
        return Err(invalid(format!("anchor {} is not in the fragment", fragment.anchor)));
    }
    let topo = Topology::new(graph)?;
    let set = topo.mask_of(&fragment.nodes)?;
    if !topo.is_weakly_connected(set) {
        return Err(invalid("fragment is not weakly connected"));
    }
    if !topo.is_convex(set) {
        return Err(invalid("fragment is not convex"));
    }
    let bound = resolve(&topo, graph, services)?;
    Ok(interface_of(&topo, graph, &bound, set, taxonomy))
}

/// Services bound to each node, by node index.
pub(crate) fn resolve<'s>(
    topo: &Topology<'_>,
    graph: &CompositeGraph,
    services: &'s impl ServiceLookup,
) -> Result<Vec<&'s AtomicService>> {
    topo.ids
        .iter()
        .map(|n| {
            let sid = &graph.nodes[*n];
            services
                .service(sid)
                .ok_or_else(|| invalid(format!("node {n} is bound to unknown service {sid}")))
        })
        .collect()
}

pub(crate) fn interface_of(
    topo: &Topology<'_>,
    graph: &CompositeGraph,
    bound: &[&AtomicService],
    set: Mask,
    taxonomy: &Taxonomy,
) -> Interface {
    let mut iface = Interface::default();
    for i in bits(set) {
        let svc = bound[i];
        let inside = topo.anc[i] & set;
        for c in &svc.inputs {
            if !bits(inside).any(|a| taxonomy.any_subsumes(&bound[a].outputs, c)) {
                iface.required_inputs.insert(c.clone());
            }
        }
        let downstream = topo.desc[i] & !set;
        for o in &svc.outputs {
            let declared = graph.outputs.iter().any(|g| taxonomy.subsumes(o, g));
            let consumed = || bits(downstream).any(|d| bound[d].inputs.iter().any(|c| taxonomy.subsumes(o, c)));
            if declared || consumed() {
                iface.provided_outputs.insert(o.clone());
            }
        }
    }
    iface
}

/// The subgraph induced by `set`, with the fragment interface as its
/// declared inputs and outputs.
pub(crate) fn induced(topo: &Topology<'_>, graph: &CompositeGraph, set: Mask, iface: &Interface) -> CompositeGraph {
    let mut sub = CompositeGraph::new(format!("{}[{}]", graph.id, bits(set).map(|i| topo.ids[i].as_str()).collect::<Vec<_>>().join(",")));
    for i in bits(set) {
        let id = topo.ids[i];
        sub.nodes.insert(id.clone(), graph.nodes[id].clone());
        for s in bits(topo.succ[i] & set) {
            sub.edges.insert((id.clone(), topo.ids[s].clone()));
        }
    }
    sub.inputs = iface.required_inputs.clone();
    sub.outputs = iface.provided_outputs.clone();
    sub
}
