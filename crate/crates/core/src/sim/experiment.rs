// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instrument;
use crate::model::{CompositeGraph, Taxonomy};
use crate::planner::{build_plan, PlanConfig};
use crate::registry::Registry;
use crate::recovery::{recover, Strategy};
use crate::report::Report;
use crate::sim::generate::{
    generate_collection, generate_registry, generate_taxonomy, GeneratorParams, SyntheticRegistry,
};
use crate::sim::rng::derive_seed;

/// Failure events and recoveries of one trial, broken down by graph order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial: usize,
    pub seed: u64,
    /// Failure events per graph order; every node fails once.
    pub events: BTreeMap<usize, u64>,
    /// Recovered events per strategy and graph order.
    pub recovered: BTreeMap<Strategy, BTreeMap<usize, u64>>,
    /// Search calls observed while recovering. Expected to be zero.
    pub lookup_search_calls: u64,
    /// Events recovered atomically but not compositely. Expected to be zero.
    pub dominance_violations: u64,
}

impl TrialResult {
    pub fn total_events(&self) -> u64 {
        self.events.values().sum()
    }

    pub fn recovered_total(&self, strategy: Strategy) -> u64 {
        self.recovered.get(&strategy).map_or(0, |m| m.values().sum())
    }

    pub fn recovered_at(&self, strategy: Strategy, order: usize) -> u64 {
        self.recovered
            .get(&strategy)
            .and_then(|m| m.get(&order))
            .copied()
            .unwrap_or(0)
    }

    pub fn probability(&self, strategy: Strategy) -> f64 {
        ratio(self.recovered_total(strategy), self.total_events())
    }
}

pub(crate) fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// The taxonomy, registry and collection of the trial seeded `trial_seed`.
/// Each is drawn from its own stream derived from that seed.
pub fn generate_world(trial_seed: u64, params: &GeneratorParams) -> Result<(SyntheticRegistry, Vec<CompositeGraph>)> {
    params.validate()?;
    let taxonomy = generate_taxonomy(
        derive_seed(trial_seed, "taxonomy", 0),
        params.n_concepts,
        params.taxonomy_depth,
    )?;
    let world = generate_registry(derive_seed(trial_seed, "registry", 0), &taxonomy, params)?;
    let graphs = generate_collection(
        derive_seed(trial_seed, "collection", 0),
        &world,
        params.n_graphs,
        params.order_min,
        params.order_max,
    )?;
    Ok((world, graphs))
}

/// One trial: regenerate the world from `trial_seed`, plan every graph, then
/// fail each node once and try both strategies.
pub fn run_trial(trial_seed: u64, params: &GeneratorParams) -> Result<TrialResult> {
    let (world, graphs) = generate_world(trial_seed, params)?;
    let mut result = evaluate_collection(&graphs, &world.registry, &world.taxonomy, &params.plan_config())?;
    result.seed = trial_seed;
    Ok(result)
}

/// Plans every graph, then fails each node once and tries both strategies.
/// The returned result has trial number and seed zero.
pub fn evaluate_collection(
    graphs: &[CompositeGraph],
    registry: &Registry,
    taxonomy: &Taxonomy,
    config: &PlanConfig,
) -> Result<TrialResult> {
    let mut result = TrialResult {
        trial: 0,
        seed: 0,
        events: BTreeMap::new(),
        recovered: Strategy::ALL.iter().map(|&s| (s, BTreeMap::new())).collect(),
        lookup_search_calls: 0,
        dominance_violations: 0,
    };
    for graph in graphs {
        let plan = build_plan(graph, registry, taxonomy, config)?;
        let order = graph.order();
        for node in graph.nodes.keys() {
            *result.events.entry(order).or_default() += 1;
            let before = instrument::snapshot();
            let mut outcome = [false; 2];
            for (k, &strategy) in Strategy::ALL.iter().enumerate() {
                outcome[k] = recover(graph, node.as_str(), &plan, strategy, registry, taxonomy)?.is_recovered();
                if outcome[k] {
                    let per_order = result.recovered.get_mut(&strategy).expect("all strategies present");
                    *per_order.entry(order).or_default() += 1;
                }
            }
            result.lookup_search_calls += (instrument::snapshot() - before).total();
            if outcome[0] && !outcome[1] {
                result.dominance_violations += 1;
            }
        }
    }
    Ok(result)
}

/// Runs `params.trials` independent trials on the calling thread.
pub fn run_experiment(params: &GeneratorParams) -> Result<Report> {
    run_experiment_with_jobs(params, 1)
}

/// Runs the trials on up to `jobs` threads. Trial `i` uses the seed derived
/// from the master seed and `i`, and results are aggregated in trial order,
/// so the report does not depend on `jobs`.
pub fn run_experiment_with_jobs(params: &GeneratorParams, jobs: usize) -> Result<Report> {
    params.validate()?;
    let one = |i: usize| -> Result<TrialResult> {
        let mut r = run_trial(derive_seed(params.seed, "trial", i as u64), params)?;
        r.trial = i;
        Ok(r)
    };
    let trials: Vec<TrialResult> = if jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::InvalidParams(format!("cannot start {jobs} workers: {e}")))?;
        pool.install(|| (0..params.trials).into_par_iter().map(one).collect::<Result<_>>())?
    } else {
        (0..params.trials).map(one).collect::<Result<_>>()?
    };
    Ok(Report::new(params.clone(), trials))
}
