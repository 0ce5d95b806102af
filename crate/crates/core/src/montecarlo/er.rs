//! Erdős–Rényi graphs `G(n; p)` with independent edges.

use rand::Rng;
use serde::Serialize;

use super::{run_tally, DegreeEstimate, EstimateWithCI};
use crate::dsu::DisjointSets;
use crate::error::{Error, Result};
use crate::model::Seed;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErReport {
    pub n: usize,
    pub p: f64,
    pub connected: EstimateWithCI,
    pub no_isolated: EstimateWithCI,
    /// Degree of node 0.
    pub degree: DegreeEstimate,
}

/// Calls `edge(v, w)` for each edge of one `G(n; p)` sample, skipping over
/// absent pairs with geometric jumps.
fn sample_edges<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R, mut edge: impl FnMut(usize, usize)) {
    if n < 2 || p <= 0.0 {
        return;
    }
    if p >= 1.0 {
        for v in 1..n {
            for w in 0..v {
                edge(v, w);
            }
        }
        return;
    }
    let ln_q = (-p).ln_1p();
    let (mut v, mut w) = (1usize, -1i64);
    loop {
        let u: f64 = rng.random();
        let skip = ((1.0 - u).ln() / ln_q).floor();
        // Jumps beyond the remaining pairs end the sample.
        if skip >= (n * n) as f64 {
            return;
        }
        w += 1 + skip as i64;
        while v < n && w >= v as i64 {
            w -= v as i64;
            v += 1;
        }
        if v >= n {
            return;
        }
        edge(v, w as usize);
    }
}

/// Estimates connectivity, absence of isolated nodes and the degree of node 0.
pub fn er_simulate(n: usize, p: f64, trials: u64, seed: Seed, workers: Option<usize>) -> Result<ErReport> {
    if n == 0 {
        return Err(Error::EmptyGraph);
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("edge probability must lie in [0, 1], got {p}")));
    }
    if trials == 0 {
        return Err(Error::Domain("trials must be at least 1".into()));
    }
    let tally = run_tally(trials, 2, workers, |i, acc| {
        let mut rng = seed.stream(i);
        let mut sets = DisjointSets::new(n);
        let mut degree = vec![0u32; n];
        sample_edges(n, p, &mut rng, |v, w| {
            sets.union(v, w);
            degree[v] += 1;
            degree[w] += 1;
        });
        acc.hits[0] += (sets.components() == 1) as u64;
        acc.hits[1] += (n == 1 || degree.iter().all(|&d| d > 0)) as u64;
        acc.add_degree(degree[0] as usize);
    })?;
    Ok(ErReport {
        n,
        p,
        connected: EstimateWithCI::from_counts(tally.hits[0], trials),
        no_isolated: EstimateWithCI::from_counts(tally.hits[1], trials),
        degree: DegreeEstimate::from_sums(trials, tally.degree_sum, tally.degree_sq_sum),
    })
}
