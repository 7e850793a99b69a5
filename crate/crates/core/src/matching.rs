// SPDX-License-Identifier: Apache-2.0

//! Matchmaking: deciding whether a candidate can stand in for a fragment,
//! and searching the registry for such candidates.
//!
//! A candidate is *similar* to what it replaces when its interface matches
//! (exactly, or as a plug-in) and its aggregate QoS lies within a relative
//! distance `epsilon` of the target.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::fragment::resolve;
use crate::instrument;
use crate::model::{AtomicService, CompositeGraph, ConceptId, Interface, QoS, ServiceId, ServiceLookup, Taxonomy};
use crate::registry::Registry;
use crate::topology::{bits, Topology};

/// How well a candidate interface matches a required one. Ordered from
/// best to worst.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum MatchDegree {
    /// Same inputs and same outputs.
    Exact,
    /// Demands no more and provides no less, up to subsumption.
    Plugin,
    Fail,
}

impl fmt::Display for MatchDegree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MatchDegree::Exact => "EXACT",
            MatchDegree::Plugin => "PLUGIN",
            MatchDegree::Fail => "FAIL",
        })
    }
}

pub fn match_degree(required: &Interface, candidate: &Interface, taxonomy: &Taxonomy) -> MatchDegree {
    instrument::matchmaking();
    if required == candidate {
        return MatchDegree::Exact;
    }
    let demands_no_more = candidate
        .required_inputs
        .iter()
        .all(|c| taxonomy.any_subsumes(&required.required_inputs, c));
    let provides_no_less = required
        .provided_outputs
        .iter()
        .all(|o| taxonomy.any_subsumes(&candidate.provided_outputs, o));
    if demands_no_more && provides_no_less {
        MatchDegree::Plugin
    } else {
        MatchDegree::Fail
    }
}

/// Relative Chebyshev distance of `candidate` from `target`:
/// `max(|Δtime| / target.time, |Δcost| / target.cost)`.
///
/// A zero target component only matches a zero candidate component; any
/// other value is infinitely far (reported as `f64::MAX`).
pub fn qos_distance(target: QoS, candidate: QoS) -> f64 {
    instrument::matchmaking();
    relative(target.exec_time_ms, candidate.exec_time_ms).max(relative(target.cost, candidate.cost))
}

fn relative(target: f64, candidate: f64) -> f64 {
    if target > 0.0 {
        (candidate - target).abs() / target
    } else if candidate == 0.0 {
        0.0
    } else {
        f64::MAX
    }
}

/// QoS of a whole composite: time is the critical path (parallel branches
/// overlap), cost is the sum over all nodes.
pub fn aggregate_qos(graph: &CompositeGraph, services: &impl ServiceLookup) -> Result<QoS> {
    if graph.nodes.is_empty() {
        return Err(invalid(format!("graph {} is empty", graph.id)));
    }
    let topo = Topology::new(graph)?;
    let bound = resolve(&topo, graph, services)?;
    let mut finish = vec![0.0_f64; topo.len()];
    for &v in &topo.topo {
        let start = bits(topo.pred[v]).map(|p| finish[p]).fold(0.0, f64::max);
        finish[v] = start + bound[v].qos.exec_time_ms;
    }
    let time = finish.iter().copied().fold(0.0, f64::max);
    let cost = bound.iter().map(|s| s.qos.cost).sum();
    QoS::new(time, cost)
}

/// Knobs shared by both registry searches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchParams {
    /// Largest accepted [`qos_distance`].
    pub epsilon: f64,
    /// Largest replacement graph, in nodes.
    pub max_size: usize,
    /// Accept only [`MatchDegree::Exact`].
    pub strict_exact: bool,
}

impl Default for SearchParams {
    fn default() -> Self {
        Self { epsilon: 0.2, max_size: 3, strict_exact: false }
    }
}

impl SearchParams {
    pub fn accepts(&self, degree: MatchDegree) -> bool {
        match degree {
            MatchDegree::Exact => true,
            MatchDegree::Plugin => !self.strict_exact,
            MatchDegree::Fail => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Single,
    Chain,
    Bundle,
}

/// A candidate set of services, arranged as a small composite graph whose
/// node ids are the service ids. Its declared inputs are what it needs from
/// outside, its declared outputs everything its nodes produce.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplacementGraph {
    pub shape: Shape,
    pub graph: CompositeGraph,
    pub qos: QoS,
}

impl ReplacementGraph {
    /// `a` for a single service, `a>b>c` for a chain, `a+b` for a bundle.
    pub fn canonical_id(&self) -> &str {
        &self.graph.id
    }

    pub fn order(&self) -> usize {
        self.graph.order()
    }

    pub fn interface(&self) -> Interface {
        Interface {
            required_inputs: self.graph.inputs.clone(),
            provided_outputs: self.graph.outputs.clone(),
        }
    }

    pub fn services(&self) -> impl Iterator<Item = &ServiceId> {
        self.graph.nodes.values()
    }
}

/// A replacement together with how well it matched its target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub replacement: ReplacementGraph,
    pub degree: MatchDegree,
    pub distance: f64,
}

impl Candidate {
    pub(crate) fn rank(&self, other: &Self) -> Ordering {
        self.replacement
            .order()
            .cmp(&other.replacement.order())
            .then(self.degree.cmp(&other.degree))
            .then(self.distance.total_cmp(&other.distance))
            .then_with(|| self.replacement.canonical_id().cmp(other.replacement.canonical_id()))
    }
}

/// Registry services similar to `required`/`target`, skipping `exclude`.
/// Exact matches come first, then by QoS distance, then by id.
pub fn find_atomic_replacements(
    required: &Interface,
    target: QoS,
    registry: &Registry,
    taxonomy: &Taxonomy,
    params: &SearchParams,
    exclude: &BTreeSet<ServiceId>,
) -> Vec<AtomicService> {
    instrument::matchmaking();
    // Any match must produce every required output, so one producer list
    // bounds the scan.
    let pool: Vec<usize> = match required
        .provided_outputs
        .iter()
        .map(|o| registry.producer_indices(o))
        .min_by_key(|p| p.len())
    {
        Some(p) => p.to_vec(),
        None => (0..registry.len()).collect(),
    };
    let mut hits: Vec<(MatchDegree, f64, &AtomicService)> = pool
        .into_iter()
        .map(|i| registry.at(i))
        .filter(|s| !exclude.contains(&s.id))
        .filter_map(|s| {
            let degree = match_degree(required, &s.interface(), taxonomy);
            if !params.accepts(degree) {
                return None;
            }
            let distance = qos_distance(target, s.qos);
            (distance <= params.epsilon).then_some((degree, distance, s))
        })
        .collect();
    hits.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)).then_with(|| a.2.id.cmp(&b.2.id)));
    hits.into_iter().map(|(_, _, s)| s.clone()).collect()
}

/// Replacement graphs similar to `required`/`target`, built from
/// non-excluded registry services, each used at most once per candidate.
///
/// Two templates are searched, up to `params.max_size` services:
///
/// * **chains** `s1 -> s2 -> ...`, where every service consumes at least
///   one output of its predecessor; a chain of one is a single service;
/// * **bundles** of two or more independent services, each of which
///   produces something satisfying a required output.
///
/// A chain's time and cost are sums; a bundle's time is the slowest member
/// and its cost the sum. Results are ordered by size, match degree, QoS
/// distance and canonical id. The single-service results are exactly
/// [`find_atomic_replacements`].
pub fn find_replacement_graphs(
    required: &Interface,
    target: QoS,
    registry: &Registry,
    taxonomy: &Taxonomy,
    params: &SearchParams,
    exclude: &BTreeSet<ServiceId>,
) -> Vec<Candidate> {
    instrument::matchmaking();
    if params.max_size == 0 {
        return Vec::new();
    }
    let Some(mut search) = Search::new(required, target, registry, taxonomy, params, exclude) else {
        return Vec::new();
    };
    search.chains();
    search.bundles();
    let mut out = search.found;
    out.sort_by(Candidate::rank);
    out
}

struct Search<'a> {
    required: &'a Interface,
    target: QoS,
    registry: &'a Registry,
    taxonomy: &'a Taxonomy,
    params: &'a SearchParams,
    excluded: Vec<bool>,
    /// Registry concepts satisfied by some required input.
    available: Vec<bool>,
    /// Registry numbers of the required outputs.
    wanted: Vec<u32>,
    time_cap: f64,
    cost_cap: f64,
    found: Vec<Candidate>,
}

/// Upper bound on an aggregate that can still land within `eps` of `target`.
/// Slightly loose so the exact distance check stays the only judge.
fn cap(target: f64, eps: f64) -> f64 {
    if target > 0.0 {
        target * (1.0 + eps) * (1.0 + 1e-9)
    } else {
        0.0
    }
}

impl<'a> Search<'a> {
    /// `None` when some required output is produced by no registry service,
    /// in which case nothing can match.
    fn new(
        required: &'a Interface,
        target: QoS,
        registry: &'a Registry,
        taxonomy: &'a Taxonomy,
        params: &'a SearchParams,
        exclude: &BTreeSet<ServiceId>,
    ) -> Option<Self> {
        let wanted = required
            .provided_outputs
            .iter()
            .map(|o| registry.concept_number(o))
            .collect::<Option<Vec<u32>>>()?;
        let mut excluded = vec![false; registry.len()];
        for id in exclude {
            if let Some(i) = registry.index_of(id) {
                excluded[i] = true;
            }
        }
        let mut available = vec![false; registry.concept_count()];
        for c in &required.required_inputs {
            let up = taxonomy.ancestors_or_self(c).map(ConceptId::as_str);
            for a in up.chain(std::iter::once(c.as_str())) {
                if let Some(k) = registry.concept_number(a) {
                    available[k as usize] = true;
                }
            }
        }
        Some(Self {
            required,
            target,
            registry,
            taxonomy,
            params,
            excluded,
            available,
            wanted,
            time_cap: cap(target.exec_time_ms, params.epsilon),
            cost_cap: cap(target.cost, params.epsilon),
            found: Vec::new(),
        })
    }

    fn fits(&self, time: f64, cost: f64) -> bool {
        time <= self.time_cap && cost <= self.cost_cap
    }

    fn produces(&self, i: usize, concept: u32) -> bool {
        self.registry.satisfied_by(i).binary_search(&concept).is_ok()
    }

    /// Services whose inputs are all satisfied by required inputs.
    fn enabled(&self) -> Vec<usize> {
        (0..self.registry.len())
            .filter(|&i| {
                let s = self.registry.at(i);
                !self.excluded[i]
                    && self.fits(s.qos.exec_time_ms, s.qos.cost)
                    && self.registry.needs(i).iter().all(|&c| self.available[c as usize])
            })
            .collect()
    }

    fn chains(&mut self) {
        for first in self.enabled() {
            let s = self.registry.at(first);
            self.extend_chain(&mut vec![first], s.qos.exec_time_ms, s.qos.cost);
        }
    }

    fn extend_chain(&mut self, seq: &mut Vec<usize>, time: f64, cost: f64) {
        self.evaluate(seq, Shape::Chain);
        if seq.len() >= self.params.max_size {
            return;
        }
        let last = *seq.last().expect("non-empty chain");
        for &t in self.registry.feeds(last) {
            let s = self.registry.at(t);
            let (t_time, t_cost) = (time + s.qos.exec_time_ms, cost + s.qos.cost);
            if self.excluded[t] || seq.contains(&t) || !self.fits(t_time, t_cost) {
                continue;
            }
            let fed = self
                .registry
                .needs(t)
                .iter()
                .all(|&c| self.available[c as usize] || seq.iter().any(|&p| self.produces(p, c)));
            if fed {
                seq.push(t);
                self.extend_chain(seq, t_time, t_cost);
                seq.pop();
            }
        }
    }

    fn bundles(&mut self) {
        if self.params.max_size < 2 {
            return;
        }
        let useful: Vec<usize> = self
            .enabled()
            .into_iter()
            .filter(|&i| self.wanted.iter().any(|&r| self.produces(i, r)))
            .collect();
        let mut members = Vec::new();
        self.extend_bundle(&useful, 0, &mut members, 0.0, 0.0);
    }

    fn extend_bundle(&mut self, pool: &[usize], from: usize, members: &mut Vec<usize>, time: f64, cost: f64) {
        if members.len() >= 2 {
            self.evaluate(members, Shape::Bundle);
        }
        if members.len() >= self.params.max_size {
            return;
        }
        for k in from..pool.len() {
            let s = self.registry.at(pool[k]);
            let (b_time, b_cost) = (time.max(s.qos.exec_time_ms), cost + s.qos.cost);
            if !self.fits(b_time, b_cost) {
                continue;
            }
            members.push(pool[k]);
            self.extend_bundle(pool, k + 1, members, b_time, b_cost);
            members.pop();
        }
    }

    fn evaluate(&mut self, members: &[usize], shape: Shape) {
        // Cheap necessary condition for a non-FAIL match.
        if !self.wanted.iter().all(|&r| members.iter().any(|&m| self.produces(m, r))) {
            return;
        }
        let services: Vec<&AtomicService> = members.iter().map(|&i| self.registry.at(i)).collect();
        let mut iface = Interface::default();
        let (mut time, mut cost) = (0.0_f64, 0.0_f64);
        for (k, s) in services.iter().enumerate() {
            for c in &s.inputs {
                let internal = shape == Shape::Chain
                    && services[..k].iter().any(|p| self.taxonomy.any_subsumes(&p.outputs, c));
                if !internal {
                    iface.required_inputs.insert(c.clone());
                }
            }
            iface.provided_outputs.extend(s.outputs.iter().cloned());
            time = match shape {
                Shape::Bundle => time.max(s.qos.exec_time_ms),
                _ => time + s.qos.exec_time_ms,
            };
            cost += s.qos.cost;
        }
        let degree = match_degree(self.required, &iface, self.taxonomy);
        if !self.params.accepts(degree) {
            return;
        }
        let qos = QoS { exec_time_ms: time, cost };
        let distance = qos_distance(self.target, qos);
        if distance > self.params.epsilon {
            return;
        }
        let shape = if services.len() == 1 { Shape::Single } else { shape };
        let sep = if shape == Shape::Bundle { "+" } else { ">" };
        let id = services.iter().map(|s| s.id.as_str()).collect::<Vec<_>>().join(sep);
        let mut graph = CompositeGraph::new(id);
        for s in &services {
            graph.nodes.insert(s.id.as_str().into(), s.id.clone());
        }
        if shape == Shape::Chain {
            for w in services.windows(2) {
                graph.edges.insert((w[0].id.as_str().into(), w[1].id.as_str().into()));
            }
        }
        graph.inputs = iface.required_inputs;
        graph.outputs = iface.provided_outputs;
        self.found.push(Candidate { replacement: ReplacementGraph { shape, graph, qos }, degree, distance });
    }
}
