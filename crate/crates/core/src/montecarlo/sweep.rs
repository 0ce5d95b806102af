//! Parameter sweeps over `(n, α)` and the Monte Carlo union-bound diagnostic.

use std::collections::BTreeMap;

use serde::Serialize;

use super::{er_simulate, run_tally, run_trials, EstimateWithCI, Event, ExperimentSpec};
use crate::analysis::{self, NodeSet};
use crate::combinatorics::union_bound_rhs;
use crate::error::{Error, Result};
use crate::model::{splitmix64, KeyGraph, Seed, Theta};
use crate::scaling::{k_from_alpha, matched_er_p, Scaling};

/// One `(n, α)` cell. Failed cells keep their coordinates and carry `error`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub n: u64,
    pub requested_alpha: f64,
    pub k: Option<u32>,
    pub p: Option<u32>,
    pub realized_alpha: Option<f64>,
    pub connected: Option<EstimateWithCI>,
    pub no_isolated: Option<EstimateWithCI>,
    pub er_connected: Option<EstimateWithCI>,
    /// `P < 2K`: every sample is complete.
    pub complete_graph: bool,
    /// `K` was pinned at 1 or at `P`.
    pub clamped: bool,
    pub error: Option<String>,
}

impl SweepRow {
    fn failed(n: u64, alpha: f64, p: Option<u32>, err: Error) -> Self {
        Self {
            n,
            requested_alpha: alpha,
            k: None,
            p,
            realized_alpha: None,
            connected: None,
            no_isolated: None,
            er_connected: None,
            complete_graph: false,
            clamped: false,
            error: Some(err.to_string()),
        }
    }
}

/// Seed of the cell keyed by `(n, K, P)`, so cells that round to the same
/// parameters draw the same graphs.
fn cell_seed(seed: Seed, n: u64, theta: Theta) -> Seed {
    let tag = splitmix64(splitmix64(n) ^ theta.k() as u64) ^ theta.p() as u64;
    seed.derive(tag)
}

fn run_cell(n: u64, alpha: f64, base: &Scaling, trials: u64, seed: Seed, workers: Option<usize>) -> SweepRow {
    let p = match base.pool.pool(n) {
        Ok(p) => p,
        Err(e) => return SweepRow::failed(n, alpha, None, e),
    };
    let fit = match k_from_alpha(n, p, alpha) {
        Ok(f) => f,
        Err(e) => return SweepRow::failed(n, alpha, Some(p), e),
    };
    let result = (|| -> Result<SweepRow> {
        let theta = Theta::new(fit.k, p)?;
        let cell = cell_seed(seed, n, theta);
        let spec = ExperimentSpec::new(n as usize, theta, trials, cell, vec![Event::Connected, Event::NoIsolated])
            .with_workers(workers);
        let report = run_trials(&spec)?;
        let er = er_simulate(n as usize, matched_er_p(theta).float(), trials, cell.derive(1), workers)?;
        Ok(SweepRow {
            n,
            requested_alpha: alpha,
            k: Some(fit.k),
            p: Some(p),
            realized_alpha: Some(fit.realized_alpha),
            connected: Some(report.estimates[0].estimate),
            no_isolated: Some(report.estimates[1].estimate),
            er_connected: Some(er.connected),
            complete_graph: theta.is_complete(),
            clamped: fit.clamped(),
            error: None,
        })
    })();
    result.unwrap_or_else(|e| SweepRow::failed(n, alpha, Some(p), e))
}

/// Estimates connectivity over the grid `n_values × alpha_values`, with `P`
/// from the pool rule of `base` and `K` from [`k_from_alpha`]. Rows come out
/// in `n`-major order.
pub fn sweep(
    base: &Scaling,
    n_values: &[u64],
    alpha_values: &[f64],
    trials: u64,
    seed: Seed,
    workers: Option<usize>,
) -> Result<Vec<SweepRow>> {
    if trials == 0 {
        return Err(Error::Domain("trials must be at least 1".into()));
    }
    if let Some(a) = alpha_values.iter().find(|a| !a.is_finite()) {
        return Err(Error::Domain(format!("alpha values must be finite, got {a}")));
    }
    Ok(n_values
        .iter()
        .flat_map(|&n| alpha_values.iter().map(move |&a| (n, a)))
        .map(|(n, a)| run_cell(n, a, base, trials, seed, workers))
        .collect())
}

/// Largest graph the union-bound diagnostic accepts.
pub const UNION_BOUND_MAX_NODES: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnionTerm {
    pub r: u32,
    pub a_event: EstimateWithCI,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnionBoundReport {
    pub n: usize,
    pub theta: Theta,
    pub trials: u64,
    /// Disconnected yet free of isolated nodes.
    pub lhs: EstimateWithCI,
    /// `r = 1 ..= ⌊n/2⌋`; only `r >= 2` enters the sum.
    pub terms: Vec<UnionTerm>,
    pub rhs_point: f64,
    /// The sum with every term at its upper confidence limit.
    pub rhs_upper: f64,
    pub point_ok: bool,
    /// Upper confidence limit of the left side against the upper plug-in of
    /// the right side.
    pub upper_ok: bool,
    /// False only if even the lower confidence limit of the left side
    /// exceeds the upper plug-in of the right side.
    pub consistent: bool,
}

/// Checks by simulation that `P(disconnected, no isolated node)` stays below
/// `Σ_{r=2}^{⌊n/2⌋} C(n,r) P(A_{n,r})`. A diagnostic, not a proof.
pub fn union_bound_check(
    n: usize,
    theta: Theta,
    trials: u64,
    seed: Seed,
    workers: Option<usize>,
) -> Result<UnionBoundReport> {
    if n == 0 {
        return Err(Error::EmptyGraph);
    }
    if n > UNION_BOUND_MAX_NODES {
        return Err(Error::BudgetExceeded {
            needed: format!("union bound check on {n} nodes"),
            budget: UNION_BOUND_MAX_NODES as u64,
        });
    }
    if trials == 0 {
        return Err(Error::Domain("trials must be at least 1".into()));
    }
    let half = n / 2;
    let prefixes: Vec<NodeSet> = (1..=half).map(|r| NodeSet::prefix(r, n)).collect::<Result<_>>()?;
    let tally = run_tally(trials, 1 + half, workers, |i, acc| {
        let g = KeyGraph::build_indexed(n, theta, seed, i).expect("n >= 1");
        let s = analysis::summarize(&g);
        if !s.connected() && s.isolated == 0 {
            acc.hits[0] += 1;
        }
        for (slot, set) in prefixes.iter().enumerate() {
            if analysis::a_event(&g, set).expect("prefix fits") {
                acc.hits[1 + slot] += 1;
            }
        }
    })?;

    let lhs = EstimateWithCI::from_counts(tally.hits[0], trials);
    let terms: Vec<UnionTerm> = (1..=half)
        .map(|r| UnionTerm { r: r as u32, a_event: EstimateWithCI::from_counts(tally.hits[r], trials) })
        .collect();
    let point: BTreeMap<u32, f64> = terms.iter().map(|t| (t.r, t.a_event.point)).collect();
    let upper: BTreeMap<u32, f64> = terms.iter().map(|t| (t.r, t.a_event.ci_high)).collect();
    let rhs_point = union_bound_rhs(n as u32, &point)?;
    let rhs_upper = union_bound_rhs(n as u32, &upper)?;
    Ok(UnionBoundReport {
        n,
        theta,
        trials,
        lhs,
        terms,
        rhs_point,
        rhs_upper,
        point_ok: lhs.point <= rhs_point,
        upper_ok: lhs.ci_high <= rhs_upper,
        consistent: lhs.ci_low <= rhs_upper,
    })
}
