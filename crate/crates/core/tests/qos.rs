// SPDX-License-Identifier: Apache-2.0

mod oracle;

use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::Rng;
use subgraph_recovery::sim::rng::seeded_rng;
use subgraph_recovery::{aggregate_qos, AtomicService, CompositeGraph, QoS, ServiceId};

fn lookup(qos: &[(f64, f64)]) -> BTreeMap<ServiceId, AtomicService> {
    qos.iter()
        .enumerate()
        .map(|(i, &(t, c))| {
            let s = AtomicService::new(format!("s{i}"), Vec::<&str>::new(), ["x"], QoS::new(t, c).unwrap());
            (s.id.clone(), s)
        })
        .collect()
}

fn graph(order: usize, edges: &[(usize, usize)]) -> CompositeGraph {
    let mut g = CompositeGraph::new("g");
    for i in 0..order {
        g = g.with_node(format!("n{i}"), format!("s{i}"));
    }
    for &(a, b) in edges {
        g = g.with_edge(format!("n{a}"), format!("n{b}"));
    }
    g
}

#[test]
fn examples() {
    let s = lookup(&[(10.0, 1.0), (20.0, 2.0)]);
    assert_eq!(aggregate_qos(&graph(2, &[(0, 1)]), &s).unwrap(), QoS::new(30.0, 3.0).unwrap());
    assert_eq!(aggregate_qos(&graph(2, &[]), &s).unwrap(), QoS::new(20.0, 3.0).unwrap());
    assert_eq!(aggregate_qos(&graph(1, &[]), &s).unwrap(), QoS::new(10.0, 1.0).unwrap());
    let s = lookup(&[(5.0, 1.0), (30.0, 2.0), (12.0, 4.0), (7.0, 8.0)]);
    let diamond = graph(4, &[(0, 1), (0, 2), (1, 3), (2, 3)]);
    assert_eq!(aggregate_qos(&diamond, &s).unwrap(), QoS::new(42.0, 15.0).unwrap());
}

#[test]
fn unknown_service_or_cycle_is_rejected() {
    let s = lookup(&[(10.0, 1.0)]);
    assert!(aggregate_qos(&graph(2, &[]), &s).is_err());
    let s = lookup(&[(10.0, 1.0), (10.0, 1.0)]);
    assert!(aggregate_qos(&graph(2, &[(0, 1), (1, 0)]), &s).is_err());
}

proptest! {
    #[test]
    fn chains_sum_and_antichains_take_the_max(times in prop::collection::vec(0u32..1000, 1..=6)) {
        let qos: Vec<(f64, f64)> = times.iter().map(|&t| (f64::from(t), f64::from(t % 7))).collect();
        let s = lookup(&qos);
        let n = qos.len();
        let chain: Vec<(usize, usize)> = (1..n).map(|i| (i - 1, i)).collect();
        let sum_t: f64 = qos.iter().map(|q| q.0).sum();
        let sum_c: f64 = qos.iter().map(|q| q.1).sum();
        let max_t = qos.iter().map(|q| q.0).fold(0.0, f64::max);
        prop_assert_eq!(aggregate_qos(&graph(n, &chain), &s).unwrap(), QoS::new(sum_t, sum_c).unwrap());
        prop_assert_eq!(aggregate_qos(&graph(n, &[]), &s).unwrap(), QoS::new(max_t, sum_c).unwrap());
    }

    #[test]
    fn critical_path_matches_path_enumeration(seed in any::<u64>(), order in 1usize..=6) {
        let mut rng = seeded_rng(seed);
        let mut g = oracle::random_dag(&mut rng, order, 0.5);
        let qos: Vec<(f64, f64)> = (0..order)
            .map(|_| (f64::from(rng.random_range(0u32..500)), f64::from(rng.random_range(0u32..50))))
            .collect();
        let services = lookup(&qos);
        let ids: Vec<_> = g.nodes.keys().cloned().collect();
        for (i, n) in ids.iter().enumerate() {
            g.nodes.insert(n.clone(), format!("s{i}").into());
        }
        let by_name = services.iter().map(|(k, v)| (k.to_string(), v.clone())).collect();
        let (t, c) = oracle::qos(&g, &by_name);
        prop_assert_eq!(aggregate_qos(&g, &services).unwrap(), QoS::new(t, c).unwrap());
    }
}
