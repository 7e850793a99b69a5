// SPDX-License-Identifier: Apache-2.0

//! Aggregated experiment results, the per-trial CSV and the summary JSON.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::recovery::Strategy;
use crate::sim::{ratio, GeneratorParams, TrialResult};

/// Column order of the per-trial CSV.
pub const CSV_HEADER: [&str; 6] = ["strategy", "trial", "order", "events", "recovered", "probability"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub params: GeneratorParams,
    pub trials: Vec<TrialResult>,
    pub strategies: Vec<StrategySummary>,
    pub total_events: u64,
    pub lookup_search_calls: u64,
    pub dominance_violations: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategySummary {
    pub strategy: Strategy,
    /// Recovery probability of each trial, in trial order.
    pub per_trial: Vec<f64>,
    /// Mean of `per_trial`.
    pub mean: f64,
    /// Sample standard deviation of `per_trial`; zero for a single trial.
    pub std_dev: f64,
    /// Recovered events over all events, pooled across trials.
    pub pooled: f64,
    /// Pooled probability per graph order. Weighted by each order's share
    /// of events these recompose to `pooled`.
    pub by_order: BTreeMap<usize, f64>,
    pub recovered: u64,
}

impl Report {
    pub fn new(params: GeneratorParams, trials: Vec<TrialResult>) -> Self {
        let total_events = trials.iter().map(TrialResult::total_events).sum();
        let mut events_by_order: BTreeMap<usize, u64> = BTreeMap::new();
        for t in &trials {
            for (&o, &n) in &t.events {
                *events_by_order.entry(o).or_default() += n;
            }
        }
        let strategies = Strategy::ALL
            .iter()
            .map(|&strategy| {
                let per_trial: Vec<f64> = trials.iter().map(|t| t.probability(strategy)).collect();
                let (mean, std_dev) = mean_and_sd(&per_trial);
                let recovered: u64 = trials.iter().map(|t| t.recovered_total(strategy)).sum();
                let by_order = events_by_order
                    .iter()
                    .map(|(&o, &n)| {
                        let r: u64 = trials.iter().map(|t| t.recovered_at(strategy, o)).sum();
                        (o, ratio(r, n))
                    })
                    .collect();
                StrategySummary {
                    strategy,
                    per_trial,
                    mean,
                    std_dev,
                    pooled: ratio(recovered, total_events),
                    by_order,
                    recovered,
                }
            })
            .collect();
        Self {
            lookup_search_calls: trials.iter().map(|t| t.lookup_search_calls).sum(),
            dominance_violations: trials.iter().map(|t| t.dominance_violations).sum(),
            params,
            trials,
            strategies,
            total_events,
        }
    }

    pub fn strategy(&self, strategy: Strategy) -> Option<&StrategySummary> {
        self.strategies.iter().find(|s| s.strategy == strategy)
    }

    /// One row per strategy, trial and order (`order_min..=order_max`, then
    /// `all`). The probability is left empty for strata without events.
    pub fn to_csv(&self, strategies: &[Strategy]) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::InvalidInput(format!("csv: {e}"));
        w.write_record(CSV_HEADER).map_err(io)?;
        for &strategy in strategies {
            for t in &self.trials {
                let mut row = |order: String, events: u64, recovered: u64| {
                    let p = if events == 0 { String::new() } else { (recovered as f64 / events as f64).to_string() };
                    w.write_record([
                        strategy.name().to_string(),
                        t.trial.to_string(),
                        order,
                        events.to_string(),
                        recovered.to_string(),
                        p,
                    ])
                };
                for o in self.params.order_min..=self.params.order_max {
                    let events = t.events.get(&o).copied().unwrap_or(0);
                    row(o.to_string(), events, t.recovered_at(strategy, o)).map_err(io)?;
                }
                row("all".into(), t.total_events(), t.recovered_total(strategy)).map_err(io)?;
            }
        }
        let bytes = w.into_inner().map_err(|e| Error::InvalidInput(format!("csv: {e}")))?;
        String::from_utf8(bytes).map_err(|e| Error::InvalidInput(e.to_string()))
    }

    pub fn summary(&self, strategies: &[Strategy]) -> Summary {
        Summary {
            version: 1,
            params: self.params.clone(),
            trials: self.trials.len(),
            total_events: self.total_events,
            lookup_search_calls: self.lookup_search_calls,
            dominance_violations: self.dominance_violations,
            strategies: self
                .strategies
                .iter()
                .filter(|s| strategies.contains(&s.strategy))
                .map(|s| StrategyStats {
                    strategy: s.strategy,
                    mean: s.mean,
                    std_dev: s.std_dev,
                    pooled: s.pooled,
                    min: s.per_trial.iter().copied().fold(f64::INFINITY, f64::min),
                    max: s.per_trial.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                    by_order: s.by_order.clone(),
                })
                .collect(),
        }
    }
}

fn mean_and_sd(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// The summary JSON written next to the CSV. Its schema is published as
/// `summary.schema.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub version: u32,
    pub params: GeneratorParams,
    pub trials: usize,
    pub total_events: u64,
    pub lookup_search_calls: u64,
    pub dominance_violations: u64,
    pub strategies: Vec<StrategyStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyStats {
    pub strategy: Strategy,
    pub mean: f64,
    pub std_dev: f64,
    pub pooled: f64,
    pub min: f64,
    pub max: f64,
    pub by_order: BTreeMap<usize, f64>,
}
