// SPDX-License-Identifier: Apache-2.0

//! The recovery-probability experiment: synthesize a registry and a
//! collection of composite services, fail every constituent in turn, and
//! count how often each strategy recovers.

mod experiment;
mod generate;
pub mod rng;

pub(crate) use experiment::ratio;
pub use experiment::{evaluate_collection, generate_world, run_experiment, run_experiment_with_jobs, run_trial, TrialResult};
pub use generate::{
    generate_collection, generate_registry, generate_taxonomy, GeneratorParams, SyntheticRegistry,
};
