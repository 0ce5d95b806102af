//! Exhaustive enumeration over all `C(P,K)^n` ring assignments.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::Serialize;

use crate::combinatorics::{binomial, ExactProb};
use crate::dsu::RollbackSets;
use crate::error::{Error, Result};
use crate::model::{sorted_intersect, Theta};

/// Largest number of assignments the oracle will enumerate.
pub const ENUMERATION_BUDGET: u64 = 10_000_000;

/// Exact probabilities for the events on the prefix `{0, …, r-1}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrefixEvents {
    pub r: usize,
    /// The prefix induces a connected subgraph.
    pub connected: ExactProb,
    /// No edge joins the prefix to the other nodes.
    pub isolated: ExactProb,
    /// Both of the above.
    pub a_event: ExactProb,
    /// Edges `(i, i+1)` all present.
    pub path: ExactProb,
    /// Edges `(0, i)` all present.
    pub star: ExactProb,
    /// Distribution of the number of distinct keys held by the prefix.
    pub union_keys: BTreeMap<u32, ExactProb>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BruteForce {
    pub n: usize,
    pub theta: Theta,
    pub assignments: u64,
    pub p_connected: ExactProb,
    pub p_no_isolated: ExactProb,
    /// Present when requested; one entry per `r` in `1..n`.
    pub prefix: Option<Vec<PrefixEvents>>,
}

/// Exact `P(connected)` and `P(no isolated node)`.
pub fn brute_force(n: usize, theta: Theta) -> Result<BruteForce> {
    enumerate(n, theta, false)
}

/// Like [`brute_force`], also tabulating the prefix events for every `r < n`.
pub fn brute_force_with_events(n: usize, theta: Theta) -> Result<BruteForce> {
    enumerate(n, theta, true)
}

fn k_subsets(p: u32, k: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut cur: Vec<u32> = (0..k).collect();
    loop {
        out.push(cur.clone());
        let mut i = k as usize;
        while i > 0 && cur[i - 1] == p - k + (i as u32 - 1) {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        cur[i - 1] += 1;
        for j in i..k as usize {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

fn check_budget(n: usize, theta: Theta) -> Result<u64> {
    let per_node = binomial(theta.p() as u64, theta.k() as u64);
    let total = num_traits::pow(per_node, n);
    match total.to_u64() {
        Some(t) if t <= ENUMERATION_BUDGET => Ok(t),
        _ => Err(Error::BudgetExceeded {
            needed: format!("C({},{})^{} = {} assignments", theta.p(), theta.k(), n, total),
            budget: ENUMERATION_BUDGET,
        }),
    }
}

struct Walk<'a> {
    n: usize,
    types: &'a [Vec<u32>],
    t: usize,
    adj: Vec<bool>,
    events: bool,
    assign: Vec<usize>,
    sets: RollbackSets,
    degree: Vec<u32>,
    /// Smallest earlier neighbour of node `j`, or `j` itself.
    low: Vec<usize>,
    key_count: Vec<u32>,
    distinct: u32,
    prefix_connected: Vec<bool>,
    path_ok: Vec<bool>,
    star_ok: Vec<bool>,
    prefix_keys: Vec<u32>,
    connected: u64,
    no_isolated: u64,
    c: Vec<u64>,
    b: Vec<u64>,
    a: Vec<u64>,
    path: Vec<u64>,
    star: Vec<u64>,
    u: Vec<BTreeMap<u32, u64>>,
}

impl Walk<'_> {
    fn adjacent(&self, x: usize, y: usize) -> bool {
        self.adj[x * self.t + y]
    }

    fn descend(&mut self, j: usize) {
        if j == self.n {
            self.leaf();
            return;
        }
        for ty in 0..self.t {
            let mark = self.sets.checkpoint();
            self.sets.activate();
            self.assign[j] = ty;
            self.low[j] = j;
            for i in 0..j {
                if self.adjacent(self.assign[i], ty) {
                    self.sets.union(i, j);
                    self.degree[i] += 1;
                    self.degree[j] += 1;
                    self.low[j] = self.low[j].min(i);
                }
            }
            if self.events {
                for &key in &self.types[ty] {
                    if self.key_count[key as usize] == 0 {
                        self.distinct += 1;
                    }
                    self.key_count[key as usize] += 1;
                }
                let r = j + 1;
                self.prefix_connected[r] = self.sets.components() == 1;
                self.prefix_keys[r] = self.distinct;
                self.path_ok[r] = r < 2 || (self.path_ok[r - 1] && self.adjacent(self.assign[j - 1], ty));
                self.star_ok[r] = r < 2 || (self.star_ok[r - 1] && self.adjacent(self.assign[0], ty));
            }

            self.descend(j + 1);

            if self.events {
                for &key in &self.types[ty] {
                    self.key_count[key as usize] -= 1;
                    if self.key_count[key as usize] == 0 {
                        self.distinct -= 1;
                    }
                }
            }
            for i in 0..j {
                if self.adjacent(self.assign[i], ty) {
                    self.degree[i] -= 1;
                    self.degree[j] -= 1;
                }
            }
            self.sets.rollback(mark);
            self.sets.deactivate();
        }
    }

    fn leaf(&mut self) {
        if self.sets.components() == 1 {
            self.connected += 1;
        }
        if self.n == 1 || self.degree.iter().all(|&d| d > 0) {
            self.no_isolated += 1;
        }
        if !self.events {
            return;
        }
        // Cut r is crossed iff some node j >= r has a neighbour below r.
        let mut suffix_low = usize::MAX;
        for r in (1..self.n).rev() {
            suffix_low = suffix_low.min(self.low[r]);
            let isolated = suffix_low >= r;
            let connected = self.prefix_connected[r];
            self.c[r] += connected as u64;
            self.b[r] += isolated as u64;
            self.a[r] += (connected && isolated) as u64;
            self.path[r] += self.path_ok[r] as u64;
            self.star[r] += self.star_ok[r] as u64;
            *self.u[r].entry(self.prefix_keys[r]).or_insert(0) += 1;
        }
    }
}

fn ratio(count: u64, total: u64) -> ExactProb {
    if count == 0 {
        return ExactProb::zero();
    }
    if count == total {
        return ExactProb::one();
    }
    ExactProb::from_rational(BigRational::new(BigInt::from(count), BigInt::from(total)))
}

fn enumerate(n: usize, theta: Theta, events: bool) -> Result<BruteForce> {
    if n == 0 {
        return Err(Error::EmptyGraph);
    }
    let total = check_budget(n, theta)?;
    let types = k_subsets(theta.p(), theta.k());
    let t = types.len();
    let mut adj = vec![false; t * t];
    for x in 0..t {
        for y in 0..t {
            adj[x * t + y] = sorted_intersect(&types[x], &types[y]);
        }
    }
    let mut walk = Walk {
        n,
        types: &types,
        t,
        adj,
        events,
        assign: vec![0; n],
        sets: RollbackSets::new(n),
        degree: vec![0; n],
        low: vec![0; n],
        key_count: vec![0; if events { theta.p() as usize } else { 0 }],
        distinct: 0,
        prefix_connected: vec![false; n + 1],
        path_ok: vec![false; n + 1],
        star_ok: vec![false; n + 1],
        prefix_keys: vec![0; n + 1],
        connected: 0,
        no_isolated: 0,
        c: vec![0; n],
        b: vec![0; n],
        a: vec![0; n],
        path: vec![0; n],
        star: vec![0; n],
        u: vec![BTreeMap::new(); n],
    };
    walk.descend(0);

    let prefix = events.then(|| {
        (1..n)
            .map(|r| PrefixEvents {
                r,
                connected: ratio(walk.c[r], total),
                isolated: ratio(walk.b[r], total),
                a_event: ratio(walk.a[r], total),
                path: ratio(walk.path[r], total),
                star: ratio(walk.star[r], total),
                union_keys: walk.u[r].iter().map(|(&u, &c)| (u, ratio(c, total))).collect(),
            })
            .collect()
    });
    Ok(BruteForce {
        n,
        theta,
        assignments: total,
        p_connected: ratio(walk.connected, total),
        p_no_isolated: ratio(walk.no_isolated, total),
        prefix,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn theta(k: u32, p: u32) -> Theta {
        Theta::new(k, p).unwrap()
    }

    fn frac(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn subsets_are_lexicographic() {
        assert_eq!(k_subsets(4, 2), vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]);
        assert_eq!(k_subsets(3, 3), vec![vec![0, 1, 2]]);
        assert_eq!(k_subsets(7, 3).len(), 35);
    }

    #[test]
    fn examples() {
        let bf = brute_force(3, theta(1, 2)).unwrap();
        assert_eq!(bf.assignments, 8);
        assert_eq!(bf.p_connected.rational().unwrap(), &frac(1, 4));
        assert_eq!(bf.p_no_isolated.rational().unwrap(), &frac(1, 4));
        let bf = brute_force(2, theta(1, 2)).unwrap();
        assert_eq!(bf.p_connected.rational().unwrap(), &frac(1, 2));
        let bf = brute_force(4, theta(1, 3)).unwrap();
        assert_eq!(bf.p_connected.rational().unwrap(), &frac(1, 27));
    }

    #[test]
    fn single_node_and_complete_pools() {
        let bf = brute_force(1, theta(2, 5)).unwrap();
        assert_eq!(bf.p_connected.float(), 1.0);
        assert_eq!(bf.p_no_isolated.float(), 1.0);
        let bf = brute_force(4, theta(3, 5)).unwrap();
        assert_eq!(bf.p_connected.float(), 1.0);
    }

    #[test]
    fn budget_is_enforced() {
        let err = brute_force(10, theta(4, 40)).unwrap_err();
        assert!(err.is_budget());
        // 10^7 exactly is allowed: C(10,1)^7
        assert_eq!(check_budget(7, theta(1, 10)).unwrap(), 10_000_000);
        assert!(check_budget(8, theta(1, 10)).is_err());
        assert!(brute_force(0, theta(1, 2)).is_err());
    }

    #[test]
    fn two_nodes_connect_with_edge_probability() {
        // C(6,2) = 15 rings, C(4,2) = 6 avoid a given one: P(edge) = 9/15
        let bf = brute_force_with_events(2, theta(2, 6)).unwrap();
        assert_eq!(bf.p_connected.rational().unwrap(), &frac(3, 5));
        let pre = &bf.prefix.unwrap()[0];
        assert_eq!(pre.r, 1);
        assert_eq!(pre.connected.float(), 1.0);
        assert_eq!(pre.isolated.rational().unwrap(), &frac(2, 5));
        assert_eq!(pre.a_event.rational().unwrap(), &frac(2, 5));
        assert_eq!(pre.union_keys.len(), 1);
        assert_eq!(pre.union_keys[&2].float(), 1.0);
    }

    #[test]
    fn prefix_events_are_consistent() {
        let bf = brute_force_with_events(4, theta(2, 5)).unwrap();
        for pre in bf.prefix.unwrap() {
            let a = pre.a_event.rational().unwrap();
            assert!(a <= pre.connected.rational().unwrap());
            assert!(a <= pre.isolated.rational().unwrap());
            assert!(pre.path.rational().unwrap() <= pre.connected.rational().unwrap());
            assert!(pre.star.rational().unwrap() <= pre.connected.rational().unwrap());
            let total: BigRational = pre.union_keys.values().map(|p| p.rational().unwrap().clone()).sum();
            assert_eq!(total, frac(1, 1));
        }
    }
}
