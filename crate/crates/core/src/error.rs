// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

/// Errors produced by the recovery engine and the simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument referenced something that does not exist or broke a
    /// structural invariant (unknown concept, node, cyclic graph, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A caller-side precondition did not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A replacement could not be wired into the host graph.
    #[error("splice failed: {0}")]
    Splice(String),

    /// The synthetic generator ran out of attempts.
    #[error("generation exhausted: {0}")]
    GenerationExhausted(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
