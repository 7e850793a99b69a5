// SPDX-License-Identifier: Apache-2.0

//! Failure recovery for composite services.
//!
//! A composite service is a DAG of atomic services. When one node fails, the
//! smallest enclosing *fragment* (an anchored, connected, convex subgraph)
//! is swapped for a replacement built from other services in a registry:
//! a single service, a chain or a bundle of independent services. All
//! candidate replacements are computed ahead of time by [`build_plan`], so
//! [`recover`] only looks them up and splices the first one that fits.
//!
//! ```
//! use subgraph_recovery::{
//!     build_plan, recover, AtomicService, CompositeGraph, Concept, PlanConfig, QoS, Registry,
//!     Strategy, Taxonomy,
//! };
//!
//! let taxonomy = Taxonomy::new(["order", "invoice", "receipt"].map(Concept::root))?;
//! let q = |t, c| QoS::new(t, c).unwrap();
//! let registry = Registry::new(
//!     [
//!         AtomicService::new("bill", ["order"], ["invoice"], q(40.0, 2.0)),
//!         AtomicService::new("pay", ["invoice"], ["receipt"], q(60.0, 3.0)),
//!         AtomicService::new("checkout", ["order"], ["receipt"], q(90.0, 5.0)),
//!     ],
//!     &taxonomy,
//! )?;
//! let graph = CompositeGraph::new("shop")
//!     .with_node("n1", "bill")
//!     .with_node("n2", "pay")
//!     .with_edge("n1", "n2")
//!     .with_inputs(["order"])
//!     .with_outputs(["receipt"]);
//!
//! let plan = build_plan(&graph, &registry, &taxonomy, &PlanConfig::default())?;
//! let atomic = recover(&graph, "n2", &plan, Strategy::Atomic, &registry, &taxonomy)?;
//! let composite = recover(&graph, "n2", &plan, Strategy::Composite, &registry, &taxonomy)?;
//! assert!(!atomic.is_recovered());
//! assert!(composite.is_recovered());
//! # Ok::<(), subgraph_recovery::Error>(())
//! ```

mod error;
pub mod fragment;
pub mod instrument;
pub mod matching;
mod model;
pub mod planner;
pub mod recovery;
pub mod registry;
pub mod report;
pub mod sim;
mod topology;

pub use error::{Error, Result};
pub use fragment::{enumerate_fragments, fragment_interface, is_convex};
pub use matching::{
    aggregate_qos, find_atomic_replacements, find_replacement_graphs, match_degree, qos_distance, Candidate,
    MatchDegree, ReplacementGraph, SearchParams, Shape,
};
pub use model::{
    validate_graph, AtomicService, CompositeGraph, Concept, ConceptId, ConceptSet, Fragment, Interface, NodeId,
    QoS, ServiceId, ServiceLookup, Taxonomy, Violation,
};
pub use planner::{build_plan, plan_lookup, PlanConfig, PlanEntry, RecoveryPlan};
pub use recovery::{apply_replacement, recover, RecoveryOutcome, Strategy};
pub use registry::{Registry, RegistryFile};
pub use report::{Report, StrategyStats, StrategySummary, Summary};
pub use topology::MAX_NODES;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/concepts.md")]
    mod concepts {}
    #[doc = include_str!("../../../book/src/fragments.md")]
    mod fragments {}
    #[doc = include_str!("../../../book/src/matchmaking.md")]
    mod matchmaking {}
    #[doc = include_str!("../../../book/src/recovery.md")]
    mod recovery {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
