// SPDX-License-Identifier: Apache-2.0

//! Brute-force reference implementations. Deliberately naive: they share no
//! code with the library beyond the data types, and favour obviousness over
//! speed.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use subgraph_recovery::{AtomicService, CompositeGraph, ConceptId, ConceptSet, MatchDegree, NodeId, QoS, Taxonomy};

/// `available` is `required` or a descendant of it.
pub fn satisfies(tax: &Taxonomy, available: &str, required: &str) -> bool {
    let mut cur = Some(available.to_string());
    while let Some(c) = cur {
        if c == required {
            return true;
        }
        cur = tax.parent(&c).map(|p| p.to_string());
    }
    false
}

fn successors<'g>(graph: &'g CompositeGraph, v: &NodeId) -> Vec<&'g NodeId> {
    graph.edges.iter().filter(|(t, _)| t == v).map(|(_, h)| h).collect()
}

/// Every simple directed path from `from` to `to`, endpoints included.
pub fn all_paths(graph: &CompositeGraph, from: &NodeId, to: &NodeId) -> Vec<Vec<NodeId>> {
    fn walk(graph: &CompositeGraph, path: &mut Vec<NodeId>, to: &NodeId, out: &mut Vec<Vec<NodeId>>) {
        let last = path.last().unwrap().clone();
        if &last == to {
            out.push(path.clone());
            return;
        }
        for next in successors(graph, &last) {
            if !path.contains(next) {
                path.push(next.clone());
                walk(graph, path, to, out);
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    walk(graph, &mut vec![from.clone()], to, &mut out);
    out
}

/// No path between two members leaves the set.
pub fn convex_by_paths(graph: &CompositeGraph, set: &BTreeSet<NodeId>) -> bool {
    set.iter().all(|u| {
        set.iter().all(|v| {
            u == v || all_paths(graph, u, v).iter().all(|p| p.iter().all(|n| set.contains(n)))
        })
    })
}

pub fn weakly_connected(graph: &CompositeGraph, set: &BTreeSet<NodeId>) -> bool {
    let Some(start) = set.iter().next() else { return false };
    let mut seen = BTreeSet::from([start.clone()]);
    let mut stack = vec![start.clone()];
    while let Some(v) = stack.pop() {
        for (t, h) in &graph.edges {
            let other = if *t == v { h } else if *h == v { t } else { continue };
            if set.contains(other) && seen.insert(other.clone()) {
                stack.push(other.clone());
            }
        }
    }
    seen.len() == set.len()
}

/// All anchored, weakly connected, convex subsets, by testing every subset.
pub fn fragments(graph: &CompositeGraph, anchor: &NodeId, max_size: Option<usize>) -> BTreeSet<BTreeSet<NodeId>> {
    let ids: Vec<&NodeId> = graph.nodes.keys().collect();
    let mut out = BTreeSet::new();
    for mask in 1u32..(1 << ids.len()) {
        let set: BTreeSet<NodeId> = (0..ids.len()).filter(|i| mask >> i & 1 == 1).map(|i| ids[i].clone()).collect();
        if !set.contains(anchor) || max_size.is_some_and(|m| set.len() > m) {
            continue;
        }
        if weakly_connected(graph, &set) && convex_by_paths(graph, &set) {
            out.insert(set);
        }
    }
    out
}

/// Longest node-weighted path and total cost, by walking every path from
/// every source.
pub fn qos(graph: &CompositeGraph, services: &BTreeMap<String, AtomicService>) -> (f64, f64) {
    let q = |n: &NodeId| services[graph.nodes[n].as_str()].qos;
    let cost = graph.nodes.keys().map(|n| q(n).cost).sum();
    fn longest(graph: &CompositeGraph, v: &NodeId, w: &dyn Fn(&NodeId) -> f64) -> f64 {
        let tail = successors(graph, v).into_iter().map(|s| longest(graph, s, w)).fold(0.0, f64::max);
        w(v) + tail
    }
    let time = graph
        .nodes
        .keys()
        .map(|n| longest(graph, n, &|m| q(m).exec_time_ms))
        .fold(0.0, f64::max);
    (time, cost)
}

pub fn match_degree(tax: &Taxonomy, req_in: &ConceptSet, req_out: &ConceptSet, in_: &ConceptSet, out: &ConceptSet) -> MatchDegree {
    if req_in == in_ && req_out == out {
        return MatchDegree::Exact;
    }
    let accepts = in_.iter().all(|c| req_in.iter().any(|r| satisfies(tax, r, c)));
    let provides = req_out.iter().all(|r| out.iter().any(|o| satisfies(tax, o, r)));
    if accepts && provides {
        MatchDegree::Plugin
    } else {
        MatchDegree::Fail
    }
}

pub fn distance(target: QoS, cand: (f64, f64)) -> f64 {
    let rel = |t: f64, c: f64| {
        if t == 0.0 {
            if c == 0.0 {
                0.0
            } else {
                f64::MAX
            }
        } else {
            (c - t).abs() / t
        }
    };
    rel(target.exec_time_ms, cand.0).max(rel(target.cost, cand.1))
}

/// Every chain (ordered, each member consuming an output of its
/// predecessor) and every bundle (two or more members, each producing
/// something a required output accepts) of distinct non-excluded services
/// up to `max_size`, kept when it matches and lies within `eps`. Each
/// candidate is reported as canonical id, degree and distance bits.
#[allow(clippy::too_many_arguments)]
pub fn replacements(
    tax: &Taxonomy,
    services: &[AtomicService],
    req_in: &ConceptSet,
    req_out: &ConceptSet,
    target: QoS,
    eps: f64,
    max_size: usize,
    strict: bool,
    exclude: &BTreeSet<String>,
) -> BTreeSet<(String, MatchDegree, u64)> {
    let pool: Vec<&AtomicService> = services.iter().filter(|s| !exclude.contains(s.id.as_str())).collect();
    let mut out = BTreeSet::new();
    let mut keep = |id: String, inputs: ConceptSet, outputs: ConceptSet, t: f64, c: f64| {
        let degree = match_degree(tax, req_in, req_out, &inputs, &outputs);
        let ok = match degree {
            MatchDegree::Exact => true,
            MatchDegree::Plugin => !strict,
            MatchDegree::Fail => false,
        };
        let d = distance(target, (t, c));
        if ok && d <= eps {
            out.insert((id, degree, d.to_bits()));
        }
    };

    // Chains as index sequences, grown one position at a time.
    let mut frontier: Vec<Vec<usize>> = (0..pool.len()).map(|i| vec![i]).collect();
    for _ in 0..max_size {
        let mut next = Vec::new();
        for seq in &frontier {
            let mut inputs = ConceptSet::new();
            let mut outputs = ConceptSet::new();
            let (mut t, mut c) = (0.0, 0.0);
            for (k, &i) in seq.iter().enumerate() {
                let s = pool[i];
                for x in &s.inputs {
                    let internal = seq[..k].iter().any(|&p| pool[p].outputs.iter().any(|o| satisfies(tax, o, x)));
                    if !internal {
                        inputs.insert(x.clone());
                    }
                }
                outputs.extend(s.outputs.iter().cloned());
                t += s.qos.exec_time_ms;
                c += s.qos.cost;
            }
            let id = seq.iter().map(|&i| pool[i].id.as_str()).collect::<Vec<_>>().join(">");
            keep(id, inputs, outputs, t, c);
            for j in 0..pool.len() {
                let last = pool[*seq.last().unwrap()];
                let links = pool[j].inputs.iter().any(|x| last.outputs.iter().any(|o| satisfies(tax, o, x)));
                if !seq.contains(&j) && links {
                    let mut longer = seq.clone();
                    longer.push(j);
                    next.push(longer);
                }
            }
        }
        frontier = next;
    }

    // Bundles as subsets of useful services.
    let useful: Vec<&AtomicService> = pool
        .iter()
        .copied()
        .filter(|s| s.outputs.iter().any(|o| req_out.iter().any(|r| satisfies(tax, o, r))))
        .collect();
    for mask in 1u32..(1 << useful.len()) {
        let members: Vec<&AtomicService> = (0..useful.len()).filter(|i| mask >> i & 1 == 1).map(|i| useful[i]).collect();
        if members.len() < 2 || members.len() > max_size {
            continue;
        }
        let inputs = members.iter().flat_map(|s| s.inputs.iter().cloned()).collect();
        let outputs = members.iter().flat_map(|s| s.outputs.iter().cloned()).collect();
        let t = members.iter().map(|s| s.qos.exec_time_ms).fold(0.0, f64::max);
        let c = members.iter().map(|s| s.qos.cost).sum();
        let mut ids: Vec<&str> = members.iter().map(|s| s.id.as_str()).collect();
        ids.sort();
        keep(ids.join("+"), inputs, outputs, t, c);
    }
    out
}

/// A random DAG of `order` nodes. Node names are shuffled so that name
/// order says nothing about topological order.
pub fn random_dag(rng: &mut ChaCha8Rng, order: usize, density: f64) -> CompositeGraph {
    let mut names: Vec<String> = (0..order).map(|i| format!("v{i}")).collect();
    names.shuffle(rng);
    let mut g = CompositeGraph::new("dag");
    for n in &names {
        g = g.with_node(n.as_str(), "svc");
    }
    for i in 0..order {
        for j in i + 1..order {
            if rng.random_bool(density) {
                g = g.with_edge(names[i].as_str(), names[j].as_str());
            }
        }
    }
    g
}

/// A small random forest over `c0..c{n-1}`, each concept's parent drawn
/// from the ones before it.
pub fn random_taxonomy(rng: &mut ChaCha8Rng, n: usize) -> Taxonomy {
    let concepts = (0..n).map(|i| {
        let id = ConceptId::from(format!("c{i}"));
        if i > 0 && rng.random_bool(0.5) {
            subgraph_recovery::Concept::child(id, format!("c{}", rng.random_range(0..i)))
        } else {
            subgraph_recovery::Concept::root(id)
        }
    });
    let concepts: Vec<_> = concepts.collect();
    Taxonomy::new(concepts).unwrap()
}

pub fn random_concepts(rng: &mut ChaCha8Rng, n_concepts: usize, lo: usize, hi: usize) -> ConceptSet {
    let k = rng.random_range(lo..=hi);
    (0..k).map(|_| ConceptId::from(format!("c{}", rng.random_range(0..n_concepts)))).collect()
}

/// Checks a splice result against the invariants every successful
/// replacement must keep. Returns what went wrong, if anything.
pub fn check_splice(
    graph: &CompositeGraph,
    fragment: &subgraph_recovery::Fragment,
    replacement: &subgraph_recovery::ReplacementGraph,
    result: &CompositeGraph,
    registry: &subgraph_recovery::Registry,
    taxonomy: &Taxonomy,
) -> Result<(), String> {
    let violations = subgraph_recovery::validate_graph(result, registry, taxonomy);
    if !violations.is_empty() {
        return Err(format!("invalid result: {violations:?}"));
    }
    if let Some(n) = fragment.nodes.iter().find(|n| result.nodes.contains_key(*n)) {
        return Err(format!("removed node {n} survived"));
    }
    if result.order() != graph.order() - fragment.len() + replacement.order() {
        return Err(format!("order {} after replacing {} of {} by {}", result.order(), fragment.len(), graph.order(), replacement.order()));
    }
    for (n, s) in &graph.nodes {
        if !fragment.contains(n) && result.nodes.get(n) != Some(s) {
            return Err(format!("surviving node {n} lost its service"));
        }
    }
    for (t, h) in &graph.edges {
        if !fragment.contains(t) && !fragment.contains(h) && !result.edges.contains(&(t.clone(), h.clone())) {
            return Err(format!("edge {t}->{h} between survivors dropped"));
        }
    }
    let added: Vec<&subgraph_recovery::ServiceId> =
        result.nodes.iter().filter(|(n, _)| !graph.nodes.contains_key(*n)).map(|(_, s)| s).collect();
    let mut added: Vec<&str> = added.into_iter().map(|s| s.as_str()).collect();
    let mut expected: Vec<&str> = replacement.services().map(|s| s.as_str()).collect();
    added.sort();
    expected.sort();
    if added != expected {
        return Err(format!("inserted services {added:?}, expected {expected:?}"));
    }
    if result.inputs != graph.inputs || result.outputs != graph.outputs {
        return Err("graph interface changed".into());
    }
    Ok(())
}
