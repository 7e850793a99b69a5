// SPDX-License-Identifier: Apache-2.0

//! Synthetic taxonomy, registry and composite-service collection.
//!
//! Every base service produces freshly minted leaf concepts, so no two base
//! services can stand in for one another by accident. Substitutes exist
//! only where the generator plants them:
//!
//! * an *atomic substitute* `sNNN.alt` with the same interface and QoS
//!   perturbed by at most `epsilon / 2`;
//! * a *chain decomposition* `sNNN.d1 -> sNNN.d2` through a fresh
//!   intermediate concept `sNNN.mid`, whose summed QoS is likewise within
//!   `epsilon / 2` of the original.

use std::collections::BTreeSet;

use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{validate_graph, AtomicService, CompositeGraph, Concept, ConceptId, NodeId, QoS, ServiceId, Taxonomy};
use crate::planner::PlanConfig;
use crate::registry::Registry;
use crate::sim::rng::seeded_rng;

const ATTEMPTS: usize = 100;

/// Everything that shapes one simulated trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorParams {
    pub seed: u64,
    pub n_concepts: usize,
    pub taxonomy_depth: usize,
    /// Base services, before substitutes are planted.
    pub n_services: usize,
    pub n_graphs: usize,
    pub order_min: usize,
    pub order_max: usize,
    pub p_atomic_substitute: f64,
    pub p_chain_substitute: f64,
    pub epsilon: f64,
    /// Largest replacement graph.
    pub max_size: usize,
    pub trials: usize,
    #[serde(default)]
    pub strict_exact: bool,
    #[serde(default)]
    pub max_fragment_size: Option<usize>,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        Self {
            seed: 42,
            n_concepts: 60,
            taxonomy_depth: 4,
            n_services: 120,
            n_graphs: 200,
            order_min: 2,
            order_max: 6,
            p_atomic_substitute: 0.4,
            p_chain_substitute: 0.4,
            epsilon: 0.2,
            max_size: 3,
            trials: 100,
            strict_exact: false,
            max_fragment_size: None,
        }
    }
}

impl GeneratorParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        if self.order_min < 1 || self.order_min > self.order_max {
            return bad(format!("need 1 <= order_min <= order_max, got {}..{}", self.order_min, self.order_max));
        }
        if self.order_max > crate::topology::MAX_NODES {
            return bad(format!("order_max may not exceed {}", crate::topology::MAX_NODES));
        }
        for (name, p) in [("p_atomic_substitute", self.p_atomic_substitute), ("p_chain_substitute", self.p_chain_substitute)] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} must lie in [0, 1], got {p}"));
            }
        }
        if !self.epsilon.is_finite() || self.epsilon < 0.0 {
            return bad(format!("epsilon must be finite and non-negative, got {}", self.epsilon));
        }
        if self.trials < 1 {
            return bad("trials must be at least 1".into());
        }
        if self.n_concepts < 1 || self.taxonomy_depth < 1 || self.n_services < 1 || self.max_size < 1 {
            return bad("concepts, depth, services and max_size must be positive".into());
        }
        if self.max_fragment_size == Some(0) {
            return bad("max_fragment_size must be positive".into());
        }
        Ok(())
    }

    pub fn plan_config(&self) -> PlanConfig {
        PlanConfig {
            epsilon: self.epsilon,
            max_fragment_size: self.max_fragment_size,
            max_replacement_size: self.max_size,
            strict_exact: self.strict_exact,
        }
    }
}

/// A forest of `n_concepts` concepts (`c000`, `c001`, ...) whose parent
/// chains hold at most `depth` concepts.
pub fn generate_taxonomy(seed: u64, n_concepts: usize, depth: usize) -> Result<Taxonomy> {
    if n_concepts < 1 || depth < 1 {
        return Err(Error::InvalidParams("need at least one concept and depth >= 1".into()));
    }
    let mut rng = seeded_rng(seed);
    let mut taxonomy = Taxonomy::default();
    let mut ids: Vec<ConceptId> = Vec::with_capacity(n_concepts);
    let mut depths: Vec<usize> = Vec::with_capacity(n_concepts);
    for i in 0..n_concepts {
        let id = ConceptId::from(format!("c{i:03}"));
        let open: Vec<usize> = (0..i).filter(|&j| depths[j] < depth).collect();
        let parent = if open.is_empty() || rng.random_bool(0.2) {
            None
        } else {
            Some(open[rng.random_range(0..open.len())])
        };
        taxonomy.insert(Concept { id: id.clone(), parent: parent.map(|p| ids[p].clone()) })?;
        depths.push(parent.map_or(1, |p| depths[p] + 1));
        ids.push(id);
    }
    Ok(taxonomy)
}

/// A registry together with the taxonomy it needs (the input taxonomy plus
/// minted output and intermediate concepts) and the ids of the base
/// services collections are drawn from.
#[derive(Debug, Clone)]
pub struct SyntheticRegistry {
    pub taxonomy: Taxonomy,
    pub registry: Registry,
    pub base: Vec<ServiceId>,
}

pub fn generate_registry(seed: u64, taxonomy: &Taxonomy, params: &GeneratorParams) -> Result<SyntheticRegistry> {
    if taxonomy.is_empty() {
        return Err(Error::InvalidParams("taxonomy is empty".into()));
    }
    let mut rng = seeded_rng(seed);
    let concepts: Vec<ConceptId> = taxonomy.ids().cloned().collect();
    let mut tax = taxonomy.clone();
    let mut base = Vec::with_capacity(params.n_services);
    for k in 0..params.n_services {
        let id = format!("s{k:03}");
        let n_in = rng.random_range(1..=2).min(concepts.len());
        let inputs: Vec<ConceptId> = sample(&mut rng, concepts.len(), n_in)
            .into_iter()
            .map(|i| concepts[i].clone())
            .collect();
        let n_out = if rng.random_bool(0.25) { 2 } else { 1 };
        let mut outputs = Vec::with_capacity(n_out);
        for j in 0..n_out {
            let out = ConceptId::from(format!("{id}.out{j}"));
            let under = concepts[rng.random_range(0..concepts.len())].clone();
            tax.insert(Concept::child(out.clone(), under))?;
            outputs.push(out);
        }
        let qos = QoS::new(rng.random_range(10.0..500.0), rng.random_range(1.0..50.0))?;
        base.push(AtomicService::new(id, inputs, outputs, qos));
    }

    let half = params.epsilon / 2.0;
    let perturb = |rng: &mut ChaCha8Rng, v: f64| v * (1.0 + rng.random_range(-half..=half));
    let mut planted = Vec::new();
    for s in &base {
        if rng.random_bool(params.p_atomic_substitute) {
            let qos = QoS::new(perturb(&mut rng, s.qos.exec_time_ms), perturb(&mut rng, s.qos.cost))?;
            planted.push(AtomicService { id: format!("{}.alt", s.id).into(), qos, ..s.clone() });
        }
        if rng.random_bool(params.p_chain_substitute) {
            let mid = ConceptId::from(format!("{}.mid", s.id));
            tax.insert(Concept::root(mid.clone()))?;
            let time = perturb(&mut rng, s.qos.exec_time_ms);
            let cost = perturb(&mut rng, s.qos.cost);
            let split_t = rng.random_range(0.3..0.7);
            let split_c = rng.random_range(0.3..0.7);
            let (t1, c1) = (time * split_t, cost * split_c);
            planted.push(AtomicService {
                id: format!("{}.d1", s.id).into(),
                inputs: s.inputs.clone(),
                outputs: [mid.clone()].into(),
                qos: QoS::new(t1, c1)?,
            });
            planted.push(AtomicService {
                id: format!("{}.d2", s.id).into(),
                inputs: [mid].into(),
                outputs: s.outputs.clone(),
                qos: QoS::new(time - t1, cost - c1)?,
            });
        }
    }

    let base_ids = base.iter().map(|s| s.id.clone()).collect();
    let registry = Registry::new(base.into_iter().chain(planted), &tax)?;
    Ok(SyntheticRegistry { taxonomy: tax, registry, base: base_ids })
}

/// `n_graphs` composite services over the base services, with orders drawn
/// uniformly from `order_min..=order_max` and a shape drawn uniformly from
/// those the order allows: a chain, a parallel bundle, or layers of parallel
/// nodes joined all-to-all (fork/join). Successive layers prefer services
/// that consume something the previous layer produces.
pub fn generate_collection(
    seed: u64,
    world: &SyntheticRegistry,
    n_graphs: usize,
    order_min: usize,
    order_max: usize,
) -> Result<Vec<CompositeGraph>> {
    if order_min < 1 || order_min > order_max {
        return Err(Error::InvalidParams(format!("bad order range {order_min}..{order_max}")));
    }
    if n_graphs > 0 && world.base.len() < order_max {
        return Err(Error::GenerationExhausted(format!(
            "{} base services cannot fill a graph of order {order_max}",
            world.base.len()
        )));
    }
    let mut rng = seeded_rng(seed);
    let mut graphs = Vec::with_capacity(n_graphs);
    for g in 0..n_graphs {
        let order = rng.random_range(order_min..=order_max);
        let mut built = None;
        for _ in 0..ATTEMPTS {
            let graph = build_graph(&mut rng, world, format!("g{g:04}"), order);
            if validate_graph(&graph, &world.registry, &world.taxonomy).is_empty() {
                built = Some(graph);
                break;
            }
        }
        match built {
            Some(graph) => graphs.push(graph),
            None => {
                return Err(Error::GenerationExhausted(format!(
                    "no valid graph of order {order} after {ATTEMPTS} attempts"
                )))
            }
        }
    }
    Ok(graphs)
}

fn layer_sizes(rng: &mut ChaCha8Rng, order: usize) -> Vec<usize> {
    let shapes = match order {
        1 => 1,
        2 => 2,
        _ => 3,
    };
    match rng.random_range(0..shapes) {
        0 => vec![1; order],
        1 => vec![order],
        _ => {
            let layers = rng.random_range(2..order);
            let mut sizes = vec![1; layers];
            for _ in layers..order {
                sizes[rng.random_range(0..layers)] += 1;
            }
            sizes
        }
    }
}

fn build_graph(rng: &mut ChaCha8Rng, world: &SyntheticRegistry, id: String, order: usize) -> CompositeGraph {
    let (reg, tax) = (&world.registry, &world.taxonomy);
    let mut graph = CompositeGraph::new(id);
    let mut used: BTreeSet<&ServiceId> = BTreeSet::new();
    let mut previous: Vec<(NodeId, &AtomicService)> = Vec::new();
    let mut placed: Vec<(NodeId, &AtomicService)> = Vec::new();
    let mut layers: Vec<usize> = Vec::new();
    for (l, size) in layer_sizes(rng, order).into_iter().enumerate() {
        let mut layer = Vec::with_capacity(size);
        for _ in 0..size {
            let feeding: Vec<&ServiceId> = world
                .base
                .iter()
                .filter(|sid| !used.contains(sid))
                .filter(|sid| {
                    let s = reg.get(sid).expect("base services are registered");
                    previous
                        .iter()
                        .any(|(_, p)| s.inputs.iter().any(|c| tax.any_subsumes(&p.outputs, c)))
                })
                .collect();
            let pool: Vec<&ServiceId> = if feeding.is_empty() {
                world.base.iter().filter(|sid| !used.contains(sid)).collect()
            } else {
                feeding
            };
            let sid = pool[rng.random_range(0..pool.len())];
            used.insert(sid);
            let node = NodeId::from(format!("n{:02}", placed.len() + 1));
            let service = reg.get(sid).expect("base services are registered");
            graph.nodes.insert(node.clone(), sid.clone());
            for (p, _) in &previous {
                graph.edges.insert((p.clone(), node.clone()));
            }
            layer.push((node.clone(), service));
            placed.push((node, service));
            layers.push(l);
        }
        previous = layer;
    }

    // Layer l is wired all-to-all to layer l + 1, so the ancestors of a node
    // are exactly the nodes of earlier layers.
    for (k, (_, s)) in placed.iter().enumerate() {
        for c in &s.inputs {
            let fed = placed[..k]
                .iter()
                .zip(&layers)
                .any(|((_, p), &l)| l < layers[k] && tax.any_subsumes(&p.outputs, c));
            if !fed {
                graph.inputs.insert(c.clone());
            }
        }
        for o in &s.outputs {
            let consumed = placed
                .iter()
                .zip(&layers)
                .skip(k + 1)
                .any(|((_, d), &l)| l > layers[k] && d.inputs.iter().any(|c| tax.subsumes(o, c)));
            if !consumed {
                graph.outputs.insert(o.clone());
            }
        }
    }
    graph
}
