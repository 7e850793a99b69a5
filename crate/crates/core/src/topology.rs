// SPDX-License-Identifier: Apache-2.0

//! Indexed, bitmask view of an acyclic [`CompositeGraph`].

use crate::error::{invalid, Result};
use crate::model::{CompositeGraph, NodeId};

/// Node subset of a graph with at most [`MAX_NODES`] nodes.
pub(crate) type Mask = u64;

pub const MAX_NODES: usize = 64;

pub(crate) fn bits(mut m: Mask) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        (m != 0).then(|| {
            let i = m.trailing_zeros() as usize;
            m &= m - 1;
            i
        })
    })
}

pub(crate) fn bit(i: usize) -> Mask {
    1 << i
}

/// Node `i` is the `i`-th node id in sorted order.
pub(crate) struct Topology<'g> {
    pub ids: Vec<&'g NodeId>,
    pub succ: Vec<Mask>,
    pub pred: Vec<Mask>,
    /// Strict descendants.
    pub desc: Vec<Mask>,
    /// Strict ancestors.
    pub anc: Vec<Mask>,
    /// A topological order of node indices.
    pub topo: Vec<usize>,
}

impl<'g> Topology<'g> {
    pub fn new(graph: &'g CompositeGraph) -> Result<Self> {
        let n = graph.nodes.len();
        if n > MAX_NODES {
            return Err(invalid(format!(
                "graph {} has {n} nodes; at most {MAX_NODES} are supported",
                graph.id
            )));
        }
        let ids: Vec<&NodeId> = graph.nodes.keys().collect();
        let mut succ = vec![0; n];
        let mut pred = vec![0; n];
        for (tail, head) in &graph.edges {
            let (t, h) = match (ids.binary_search(&tail), ids.binary_search(&head)) {
                (Ok(t), Ok(h)) => (t, h),
                _ => return Err(invalid(format!("graph {}: dangling edge {tail} -> {head}", graph.id))),
            };
            succ[t] |= bit(h);
            pred[h] |= bit(t);
        }

        let mut indegree: Vec<u32> = pred.iter().map(|p| p.count_ones()).collect();
        let mut ready: Vec<usize> = (0..n).rev().filter(|&i| indegree[i] == 0).collect();
        let mut topo = Vec::with_capacity(n);
        while let Some(v) = ready.pop() {
            topo.push(v);
            for s in bits(succ[v]) {
                indegree[s] -= 1;
                if indegree[s] == 0 {
                    ready.push(s);
                }
            }
        }
        if topo.len() < n {
            return Err(invalid(format!("graph {} is cyclic", graph.id)));
        }

        let mut anc = vec![0; n];
        for &v in &topo {
            for p in bits(pred[v]) {
                anc[v] |= anc[p] | bit(p);
            }
        }
        let mut desc = vec![0; n];
        for &v in topo.iter().rev() {
            for s in bits(succ[v]) {
                desc[v] |= desc[s] | bit(s);
            }
        }
        Ok(Self { ids, succ, pred, desc, anc, topo })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn index(&self, node: &str) -> Option<usize> {
        self.ids.binary_search_by(|id| id.as_str().cmp(node)).ok()
    }

    pub fn all(&self) -> Mask {
        if self.len() == MAX_NODES {
            Mask::MAX
        } else {
            bit(self.len()) - 1
        }
    }

    pub fn union_of(&self, rel: &[Mask], set: Mask) -> Mask {
        bits(set).fold(0, |acc, i| acc | rel[i])
    }

    /// Undirected neighbours of `i`.
    pub fn neighbours(&self, i: usize) -> Mask {
        self.succ[i] | self.pred[i]
    }

    /// No directed path leaves `set` and comes back.
    pub fn is_convex(&self, set: Mask) -> bool {
        self.union_of(&self.desc, set) & self.union_of(&self.anc, set) & !set == 0
    }

    pub fn is_weakly_connected(&self, set: Mask) -> bool {
        if set == 0 {
            return false;
        }
        let mut seen = bit(set.trailing_zeros() as usize);
        let mut frontier = seen;
        while frontier != 0 {
            let next = self.union_of(&self.succ, frontier) | self.union_of(&self.pred, frontier);
            frontier = next & set & !seen;
            seen |= frontier;
        }
        seen == set
    }

    pub fn mask_of<'a>(&self, nodes: impl IntoIterator<Item = &'a NodeId>) -> Result<Mask> {
        let mut m = 0;
        for n in nodes {
            let i = self.index(n).ok_or_else(|| invalid(format!("unknown node {n}")))?;
            m |= bit(i);
        }
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diamond() -> CompositeGraph {
        CompositeGraph::new("d")
            .with_node("a", "s")
            .with_node("b", "s")
            .with_node("c", "s")
            .with_node("d", "s")
            .with_edge("a", "b")
            .with_edge("a", "c")
            .with_edge("b", "d")
            .with_edge("c", "d")
    }

    #[test]
    fn closures_on_a_diamond() {
        let g = diamond();
        let t = Topology::new(&g).unwrap();
        assert_eq!(t.desc[0], 0b1110);
        assert_eq!(t.anc[3], 0b0111);
        assert_eq!(t.topo[0], 0);
        assert_eq!(*t.topo.last().unwrap(), 3);
        assert!(t.is_convex(0b0111));
        assert!(!t.is_convex(0b1011));
        assert!(t.is_weakly_connected(0b1011));
        assert!(!t.is_weakly_connected(0b0110));
    }

    #[test]
    fn cyclic_and_dangling_graphs_are_rejected() {
        let g = diamond().with_edge("d", "a");
        assert!(Topology::new(&g).is_err());
        let g = diamond().with_edge("d", "zz");
        assert!(Topology::new(&g).is_err());
    }
}
