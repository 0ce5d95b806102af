//! Graph predicates and statistics on a single [`KeyGraph`].
//!
//! Whole-graph connectivity uses union-find. Small graphs test every pair;
//! larger ones group `(key, node)` incidences by key and union every node
//! listing the same key, which gives the same components without touching all
//! `n²/2` pairs.

use serde::Serialize;

use crate::dsu::DisjointSets;
use crate::error::{Error, Result};
use crate::model::{sorted_intersect, KeyGraph};

/// Graphs up to this size are processed by pairwise ring tests.
pub const PAIRWISE_MAX_NODES: usize = 64;

/// Sorted, distinct node indices valid for a given graph size.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct NodeSet(Vec<usize>);

impl NodeSet {
    pub fn new(mut members: Vec<usize>, n: usize) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::EmptyNodeSet);
        }
        members.sort_unstable();
        if let Some(w) = members.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateNode(w[0]));
        }
        let last = *members.last().unwrap();
        if last >= n {
            return Err(Error::NodeOutOfRange { index: last, n });
        }
        Ok(Self(members))
    }

    /// `{0, …, r-1}`.
    pub fn prefix(r: usize, n: usize) -> Result<Self> {
        Self::new((0..r).collect(), n)
    }

    pub fn members(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn check(&self, g: &KeyGraph) -> Result<()> {
        match self.0.last() {
            Some(&last) if last >= g.n() => Err(Error::NodeOutOfRange { index: last, n: g.n() }),
            _ => Ok(()),
        }
    }
}

/// A spanning tree on labels `0..r`, given by its `r - 1` edges.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct TreeShape {
    vertices: usize,
    edges: Vec<(usize, usize)>,
}

impl TreeShape {
    pub fn new(vertices: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        if vertices == 0 {
            return Err(Error::InvalidTree("no vertices".into()));
        }
        if edges.len() != vertices - 1 {
            return Err(Error::InvalidTree(format!(
                "{} edges on {} vertices",
                edges.len(),
                vertices
            )));
        }
        let mut dsu = DisjointSets::new(vertices);
        for &(a, b) in &edges {
            if a >= vertices || b >= vertices {
                return Err(Error::InvalidTree(format!("label out of range in ({a}, {b})")));
            }
            if !dsu.union(a, b) {
                return Err(Error::InvalidTree(format!("edge ({a}, {b}) closes a cycle")));
            }
        }
        Ok(Self { vertices, edges })
    }

    pub fn path(vertices: usize) -> Result<Self> {
        Self::new(vertices, (1..vertices).map(|i| (i - 1, i)).collect())
    }

    pub fn star(vertices: usize) -> Result<Self> {
        Self::new(vertices, (1..vertices).map(|i| (0, i)).collect())
    }

    pub fn vertices(&self) -> usize {
        self.vertices
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }
}

/// Connectivity and isolated-node count computed in one pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ConnectivitySummary {
    pub components: usize,
    pub isolated: usize,
}

impl ConnectivitySummary {
    pub fn connected(&self) -> bool {
        self.components == 1
    }
}

pub fn summarize(g: &KeyGraph) -> ConnectivitySummary {
    let n = g.n();
    if n == 1 {
        return ConnectivitySummary { components: 1, isolated: 0 };
    }
    if n <= PAIRWISE_MAX_NODES {
        summarize_pairwise(g)
    } else {
        summarize_by_key(g)
    }
}

fn summarize_pairwise(g: &KeyGraph) -> ConnectivitySummary {
    let n = g.n();
    let mut dsu = DisjointSets::new(n);
    let mut has_neighbor = vec![false; n];
    for i in 0..n {
        for j in i + 1..n {
            if g.adjacent(i, j) {
                dsu.union(i, j);
                has_neighbor[i] = true;
                has_neighbor[j] = true;
            }
        }
    }
    ConnectivitySummary {
        components: dsu.components(),
        isolated: has_neighbor.iter().filter(|&&b| !b).count(),
    }
}

fn summarize_by_key(g: &KeyGraph) -> ConnectivitySummary {
    let n = g.n();
    let mut incidences: Vec<u64> = Vec::with_capacity(n * g.theta().k() as usize);
    for (node, ring) in g.rings().iter().enumerate() {
        incidences.extend(ring.keys().iter().map(|&key| ((key as u64) << 32) | node as u64));
    }
    incidences.sort_unstable();

    let mut dsu = DisjointSets::new(n);
    let mut has_neighbor = vec![false; n];
    let mut start = 0;
    while start < incidences.len() {
        let key = incidences[start] >> 32;
        let mut end = start + 1;
        while end < incidences.len() && incidences[end] >> 32 == key {
            end += 1;
        }
        if end - start > 1 {
            let first = (incidences[start] & 0xFFFF_FFFF) as usize;
            for &inc in &incidences[start..end] {
                let node = (inc & 0xFFFF_FFFF) as usize;
                has_neighbor[node] = true;
                dsu.union(first, node);
            }
        }
        start = end;
    }
    ConnectivitySummary {
        components: dsu.components(),
        isolated: has_neighbor.iter().filter(|&&b| !b).count(),
    }
}

/// A single node counts as connected.
pub fn is_connected(g: &KeyGraph) -> bool {
    summarize(g).connected()
}

/// Nodes without neighbours; zero for a one-node graph.
pub fn isolated_count(g: &KeyGraph) -> usize {
    summarize(g).isolated
}

/// Whether the subgraph induced by `s` is connected.
pub fn subset_connected(g: &KeyGraph, s: &NodeSet) -> Result<bool> {
    s.check(g)?;
    let m = s.members();
    let mut dsu = DisjointSets::new(m.len());
    for a in 0..m.len() {
        for b in a + 1..m.len() {
            if g.adjacent(m[a], m[b]) {
                dsu.union(a, b);
                if dsu.components() == 1 {
                    return Ok(true);
                }
            }
        }
    }
    Ok(dsu.components() == 1)
}

fn union_keys(g: &KeyGraph, s: &NodeSet) -> Vec<u32> {
    let mut keys: Vec<u32> = s
        .members()
        .iter()
        .flat_map(|&i| g.ring(i).keys().iter().copied())
        .collect();
    keys.sort_unstable();
    keys.dedup();
    keys
}

/// No edge joins a member of `s` to a non-member.
pub fn subset_isolated(g: &KeyGraph, s: &NodeSet) -> Result<bool> {
    s.check(g)?;
    if s.len() == g.n() {
        return Err(Error::EmptyComplement);
    }
    let keys = union_keys(g, s);
    let members = s.members();
    let mut next = 0;
    for j in 0..g.n() {
        if next < members.len() && members[next] == j {
            next += 1;
            continue;
        }
        if sorted_intersect(&keys, g.ring(j).keys()) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Number of distinct keys held by the members of `s`.
pub fn union_key_count(g: &KeyGraph, s: &NodeSet) -> Result<usize> {
    s.check(g)?;
    Ok(union_keys(g, s).len())
}

/// Both the induced subgraph on `s` is connected and `s` is isolated.
pub fn a_event(g: &KeyGraph, s: &NodeSet) -> Result<bool> {
    Ok(subset_connected(g, s)? && subset_isolated(g, s)?)
}

/// Whether every edge of `t` is present once tree labels are mapped onto the
/// members of `s` in increasing order.
pub fn contains_tree(g: &KeyGraph, s: &NodeSet, t: &TreeShape) -> Result<bool> {
    s.check(g)?;
    if s.len() != t.vertices() {
        return Err(Error::TreeSizeMismatch { tree: t.vertices(), set: s.len() });
    }
    let m = s.members();
    Ok(t.edges().iter().all(|&(a, b)| g.adjacent(m[a], m[b])))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Seed, Theta};
    use std::collections::VecDeque;

    fn graph(k: u32, p: u32, rings: &[&[u32]]) -> KeyGraph {
        KeyGraph::from_rings(
            Theta::new(k, p).unwrap(),
            rings.iter().map(|r| r.to_vec()).collect(),
        )
        .unwrap()
    }

    fn set(v: &[usize], n: usize) -> NodeSet {
        NodeSet::new(v.to_vec(), n).unwrap()
    }

    fn bfs_connected(g: &KeyGraph) -> bool {
        let n = g.n();
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        while let Some(u) = queue.pop_front() {
            for v in 0..n {
                if !seen[v] && g.adjacent(u, v) {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen.into_iter().all(|b| b)
    }

    #[test]
    fn connectivity_examples() {
        assert!(is_connected(&graph(1, 2, &[&[0]])));
        assert!(!is_connected(&graph(1, 2, &[&[0], &[0], &[1]])));
        assert!(is_connected(&graph(2, 4, &[&[0, 1], &[1, 2], &[2, 3]])));
    }

    #[test]
    fn isolated_examples() {
        assert_eq!(isolated_count(&graph(1, 2, &[&[0], &[0], &[1]])), 1);
        assert_eq!(isolated_count(&graph(1, 3, &[&[0], &[1], &[2]])), 3);
        assert_eq!(isolated_count(&graph(1, 3, &[&[2]])), 0);
        let g = KeyGraph::build(30, Theta::new(3, 5).unwrap(), Seed(3)).unwrap();
        assert_eq!(isolated_count(&g), 0);
    }

    #[test]
    fn subset_connected_examples() {
        let g = graph(2, 4, &[&[0, 1], &[2, 3], &[1, 2]]);
        assert!(subset_connected(&g, &set(&[0], 3)).unwrap());
        assert!(!subset_connected(&g, &set(&[0, 1], 3)).unwrap());
        assert!(subset_connected(&g, &set(&[0, 1, 2], 3)).unwrap());
    }

    #[test]
    fn subset_isolated_examples() {
        let g = graph(1, 2, &[&[0], &[0], &[1]]);
        assert!(subset_isolated(&g, &set(&[2], 3)).unwrap());
        assert!(!subset_isolated(&g, &set(&[0], 3)).unwrap());
        assert_eq!(subset_isolated(&g, &set(&[0, 1, 2], 3)), Err(Error::EmptyComplement));
        let g = graph(2, 5, &[&[0, 1], &[1, 2], &[3, 4]]);
        assert!(subset_isolated(&g, &set(&[0, 1], 3)).unwrap());
    }

    #[test]
    fn union_key_count_examples() {
        let g = graph(2, 4, &[&[0, 1], &[1, 2], &[0, 1]]);
        assert_eq!(union_key_count(&g, &set(&[1], 3)).unwrap(), 2);
        assert_eq!(union_key_count(&g, &set(&[0, 1], 3)).unwrap(), 3);
        assert_eq!(union_key_count(&g, &set(&[0, 2], 3)).unwrap(), 2);
    }

    #[test]
    fn tree_examples() {
        let pair = graph(1, 2, &[&[0], &[0]]);
        assert!(contains_tree(&pair, &set(&[0, 1], 2), &TreeShape::star(2).unwrap()).unwrap());

        let g = graph(2, 4, &[&[0, 1], &[2, 3], &[1, 2]]);
        let s = set(&[0, 1, 2], 3);
        assert!(!contains_tree(&g, &s, &TreeShape::path(3).unwrap()).unwrap());
        let relabeled = TreeShape::new(3, vec![(0, 2), (2, 1)]).unwrap();
        assert!(contains_tree(&g, &s, &relabeled).unwrap());
        assert_eq!(
            contains_tree(&g, &set(&[0, 1], 3), &relabeled),
            Err(Error::TreeSizeMismatch { tree: 3, set: 2 })
        );
    }

    #[test]
    fn node_set_validation() {
        assert_eq!(NodeSet::new(vec![], 3), Err(Error::EmptyNodeSet));
        assert_eq!(NodeSet::new(vec![3], 3), Err(Error::NodeOutOfRange { index: 3, n: 3 }));
        assert_eq!(NodeSet::new(vec![1, 1], 3), Err(Error::DuplicateNode(1)));
        assert_eq!(NodeSet::new(vec![2, 0], 3).unwrap().members(), &[0, 2]);
        let g = graph(1, 2, &[&[0], &[1]]);
        assert!(union_key_count(&g, &set(&[4], 5)).is_err());
    }

    #[test]
    fn tree_validation() {
        assert!(TreeShape::new(3, vec![(0, 1)]).is_err());
        assert!(TreeShape::new(3, vec![(0, 1), (1, 0)]).is_err());
        assert!(TreeShape::new(3, vec![(0, 1), (1, 3)]).is_err());
        assert!(TreeShape::new(1, vec![]).is_ok());
    }

    #[test]
    fn key_grouping_matches_pairwise() {
        for (i, &(n, k, p)) in [(100, 2, 400), (150, 3, 2000), (80, 1, 30), (200, 4, 5000)]
            .iter()
            .enumerate()
        {
            for trial in 0..20 {
                let g = KeyGraph::build_indexed(n, Theta::new(k, p).unwrap(), Seed(i as u64), trial)
                    .unwrap();
                assert_eq!(summarize_by_key(&g), summarize_pairwise(&g));
            }
        }
    }

    #[test]
    fn union_find_agrees_with_bfs() {
        // sizes on both sides of the pairwise/grouped switch
        let cases = [(5, 2, 12), (10, 2, 30), (40, 3, 200), (70, 2, 300), (120, 3, 900)];
        let mut checked = 0;
        for (c, &(n, k, p)) in cases.iter().enumerate() {
            let theta = Theta::new(k, p).unwrap();
            for trial in 0..2000u64 {
                let g = KeyGraph::build_indexed(n, theta, Seed(77 + c as u64), trial).unwrap();
                assert_eq!(is_connected(&g), bfs_connected(&g));
                checked += 1;
            }
        }
        assert_eq!(checked, 10_000);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn connected_implies_no_isolated(n in 1usize..90, k in 1u32..4, p in 4u32..60, seed: u64) {
                prop_assume!(k <= p);
                let g = KeyGraph::build(n, Theta::new(k, p).unwrap(), Seed(seed)).unwrap();
                if is_connected(&g) {
                    prop_assert_eq!(isolated_count(&g), 0);
                }
            }

            #[test]
            fn union_count_within_limits(n in 2usize..12, r in 1usize..12, k in 1u32..5, extra in 0u32..20, seed: u64) {
                prop_assume!(r <= n);
                let t = Theta::new(k, k + extra).unwrap();
                let g = KeyGraph::build(n, t, Seed(seed)).unwrap();
                let u = union_key_count(&g, &NodeSet::prefix(r, n).unwrap()).unwrap();
                prop_assert!(u >= k as usize);
                prop_assert!(u <= (r * k as usize).min(t.p() as usize));
            }

            #[test]
            fn isolated_connected_subset_disconnects(n in 4usize..14, k in 1u32..3, p in 6u32..30, seed: u64) {
                let g = KeyGraph::build(n, Theta::new(k, p).unwrap(), Seed(seed)).unwrap();
                for r in 2..=n / 2 {
                    let s = NodeSet::prefix(r, n).unwrap();
                    if subset_isolated(&g, &s).unwrap() && subset_connected(&g, &s).unwrap() {
                        prop_assert!(!is_connected(&g));
                    }
                }
            }
        }
    }
}
