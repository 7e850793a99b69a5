// SPDX-License-Identifier: Apache-2.0

//! Per-thread call counters for the design-time search routines.
//!
//! The run-time phase must not search. Every matchmaking predicate, registry
//! search and fragment enumeration bumps a counter here, so a caller can
//! take a [`snapshot`] before and after a run-time call and compare.

use std::cell::Cell;
use std::ops::Sub;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SearchCounts {
    /// `match_degree`, `qos_distance` and registry searches.
    pub matchmaking: u64,
    /// Fragment enumerations.
    pub enumeration: u64,
}

impl SearchCounts {
    pub fn total(&self) -> u64 {
        self.matchmaking + self.enumeration
    }
}

impl Sub for SearchCounts {
    type Output = SearchCounts;

    fn sub(self, rhs: Self) -> Self {
        SearchCounts {
            matchmaking: self.matchmaking - rhs.matchmaking,
            enumeration: self.enumeration - rhs.enumeration,
        }
    }
}

thread_local! {
    static COUNTS: Cell<SearchCounts> = const { Cell::new(SearchCounts { matchmaking: 0, enumeration: 0 }) };
}

/// Counters of the calling thread.
pub fn snapshot() -> SearchCounts {
    COUNTS.with(Cell::get)
}

pub(crate) fn matchmaking() {
    COUNTS.with(|c| {
        let mut v = c.get();
        v.matchmaking += 1;
        c.set(v);
    });
}

pub(crate) fn enumeration() {
    COUNTS.with(|c| {
        let mut v = c.get();
        v.enumeration += 1;
        c.set(v);
    });
}
