//! Seeded Monte Carlo estimation over random key graphs.
//!
//! Trial `i` always draws from `seed.stream(i)` and the per-trial results are
//! folded into integer counters, so every estimate is bit-identical whatever
//! the number of worker threads.

mod er;
mod oracle;
mod sweep;

pub use er::{er_simulate, ErReport};
pub use oracle::{brute_force, brute_force_with_events, BruteForce, PrefixEvents, ENUMERATION_BUDGET};
pub use sweep::{sweep, union_bound_check, SweepRow, UnionBoundReport, UnionTerm, UNION_BOUND_MAX_NODES};

use serde::Serialize;

use crate::analysis::{self, NodeSet, TreeShape};
use crate::error::{Error, Result};
use crate::model::{KeyGraph, Seed, Theta};

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

/// A Bernoulli frequency with its 95% Wilson score interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimateWithCI {
    pub successes: u64,
    pub trials: u64,
    pub point: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl EstimateWithCI {
    pub fn from_counts(successes: u64, trials: u64) -> Self {
        assert!(trials > 0 && successes <= trials);
        let n = trials as f64;
        let point = successes as f64 / n;
        let z2 = Z95 * Z95;
        let denom = 1.0 + z2 / n;
        let center = (point + z2 / (2.0 * n)) / denom;
        let half = Z95 * (point * (1.0 - point) / n + z2 / (4.0 * n * n)).sqrt() / denom;
        Self {
            successes,
            trials,
            point,
            ci_low: (center - half).clamp(0.0, point),
            ci_high: (center + half).clamp(point, 1.0),
        }
    }

    /// Binomial standard error `√(p(1-p)/n)` at the point estimate.
    pub fn std_err(&self) -> f64 {
        (self.point * (1.0 - self.point) / self.trials as f64).sqrt()
    }

    /// Whether `value` lies within `k` standard errors of the point estimate.
    /// The error is floored at one success's worth so that degenerate
    /// all-or-nothing estimates are not judged with zero width.
    pub fn within_se(&self, value: f64, k: f64) -> bool {
        let floor = 1.0 / self.trials as f64;
        (self.point - value).abs() <= k * self.std_err().max(floor)
    }
}

/// Mean degree of node 0 across trials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DegreeEstimate {
    pub trials: u64,
    pub mean: f64,
    pub std_dev: f64,
    pub std_err: f64,
}

impl DegreeEstimate {
    fn from_sums(trials: u64, sum: u64, sum_sq: u128) -> Self {
        let n = trials as f64;
        let mean = sum as f64 / n;
        let var = if trials > 1 {
            ((sum_sq as f64) - n * mean * mean).max(0.0) / (n - 1.0)
        } else {
            0.0
        };
        Self { trials, mean, std_dev: var.sqrt(), std_err: (var / n).sqrt() }
    }
}

/// What to count in each sampled graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Event {
    Connected,
    NoIsolated,
    SubsetConnected(NodeSet),
    SubsetIsolated(NodeSet),
    Tree(NodeSet, TreeShape),
    /// Nodes `0..r` induce a connected subgraph and are isolated from the rest.
    AEvent(usize),
    /// Degree of node 0; reported as a mean rather than a frequency.
    DegreeStats,
}

impl Event {
    pub fn label(&self) -> String {
        let list = |s: &NodeSet| {
            s.members().iter().map(|m| m.to_string()).collect::<Vec<_>>().join(",")
        };
        match self {
            Event::Connected => "connected".into(),
            Event::NoIsolated => "no_isolated".into(),
            Event::SubsetConnected(s) => format!("subset_connected[{}]", list(s)),
            Event::SubsetIsolated(s) => format!("subset_isolated[{}]", list(s)),
            Event::Tree(s, t) => {
                let edges: Vec<String> = t.edges().iter().map(|(a, b)| format!("{a}-{b}")).collect();
                format!("tree[{}]{{{}}}", list(s), edges.join(","))
            }
            Event::AEvent(r) => format!("a_event[r={r}]"),
            Event::DegreeStats => "degree".into(),
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        let fits = |s: &NodeSet| match s.members().last() {
            Some(&last) if last >= n => Err(Error::NodeOutOfRange { index: last, n }),
            _ => Ok(()),
        };
        match self {
            Event::SubsetConnected(s) => fits(s),
            Event::SubsetIsolated(s) => {
                fits(s)?;
                if s.len() == n {
                    return Err(Error::EmptyComplement);
                }
                Ok(())
            }
            Event::Tree(s, t) => {
                fits(s)?;
                if s.len() != t.vertices() {
                    return Err(Error::TreeSizeMismatch { tree: t.vertices(), set: s.len() });
                }
                Ok(())
            }
            Event::AEvent(r) if *r == 0 || *r >= n => {
                Err(Error::Domain(format!("A event needs 1 <= r < n, got r={r}, n={n}")))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub n: usize,
    pub theta: Theta,
    pub trials: u64,
    pub seed: Seed,
    pub events: Vec<Event>,
    /// `None` uses all available cores.
    pub workers: Option<usize>,
}

impl ExperimentSpec {
    pub fn new(n: usize, theta: Theta, trials: u64, seed: Seed, events: Vec<Event>) -> Self {
        Self { n, theta, trials, seed, events, workers: None }
    }

    pub fn with_workers(mut self, workers: Option<usize>) -> Self {
        self.workers = workers;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::EmptyGraph);
        }
        if self.trials == 0 {
            return Err(Error::Domain("trials must be at least 1".into()));
        }
        self.events.iter().try_for_each(|e| e.validate(self.n))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventEstimate {
    pub event: String,
    pub estimate: EstimateWithCI,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub estimates: Vec<EventEstimate>,
    pub degree: Option<DegreeEstimate>,
}

impl RunReport {
    pub fn get(&self, event: &Event) -> Option<&EstimateWithCI> {
        let label = event.label();
        self.estimates.iter().find(|e| e.event == label).map(|e| &e.estimate)
    }
}

/// Integer accumulator shared by every estimator.
#[derive(Debug, Clone, Default, PartialEq)]
pub(crate) struct Tally {
    pub hits: Vec<u64>,
    pub degree_sum: u64,
    pub degree_sq_sum: u128,
}

impl Tally {
    pub fn with_slots(slots: usize) -> Self {
        Self { hits: vec![0; slots], ..Self::default() }
    }

    #[cfg_attr(not(feature = "parallel"), allow(dead_code))]
    pub fn merge(mut self, other: Tally) -> Tally {
        for (a, b) in self.hits.iter_mut().zip(other.hits) {
            *a += b;
        }
        self.degree_sum += other.degree_sum;
        self.degree_sq_sum += other.degree_sq_sum;
        self
    }

    pub fn add_degree(&mut self, d: usize) {
        self.degree_sum += d as u64;
        self.degree_sq_sum += (d as u128) * (d as u128);
    }
}

/// Runs `per_trial(i, &mut tally)` for `i in 0..trials` and sums the tallies.
/// The sum is order-independent, so the schedule never shows in the result.
pub(crate) fn run_tally<F>(trials: u64, slots: usize, workers: Option<usize>, per_trial: F) -> Result<Tally>
where
    F: Fn(u64, &mut Tally) + Sync,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        let job = || {
            (0..trials)
                .into_par_iter()
                .fold(
                    || Tally::with_slots(slots),
                    |mut acc, i| {
                        per_trial(i, &mut acc);
                        acc
                    },
                )
                .reduce(|| Tally::with_slots(slots), Tally::merge)
        };
        match workers {
            Some(w) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(w.max(1))
                    .build()
                    .map_err(|e| Error::Domain(format!("cannot start worker pool: {e}")))?;
                Ok(pool.install(job))
            }
            None => Ok(job()),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = workers;
        let mut acc = Tally::with_slots(slots);
        for i in 0..trials {
            per_trial(i, &mut acc);
        }
        Ok(acc)
    }
}

fn event_holds(g: &KeyGraph, event: &Event, summary: Option<analysis::ConnectivitySummary>) -> bool {
    match event {
        Event::Connected => summary.unwrap().connected(),
        Event::NoIsolated => summary.unwrap().isolated == 0,
        Event::SubsetConnected(s) => analysis::subset_connected(g, s).unwrap(),
        Event::SubsetIsolated(s) => analysis::subset_isolated(g, s).unwrap(),
        Event::Tree(s, t) => analysis::contains_tree(g, s, t).unwrap(),
        Event::AEvent(r) => {
            let s = NodeSet::prefix(*r, g.n()).unwrap();
            analysis::a_event(g, &s).unwrap()
        }
        Event::DegreeStats => unreachable!("degree is tallied separately"),
    }
}

/// Estimates every requested event over `spec.trials` independent graphs.
pub fn run_trials(spec: &ExperimentSpec) -> Result<RunReport> {
    spec.validate()?;
    let bernoulli: Vec<&Event> = spec.events.iter().filter(|e| **e != Event::DegreeStats).collect();
    let wants_degree = spec.events.contains(&Event::DegreeStats);
    let wants_summary = bernoulli.iter().any(|e| matches!(e, Event::Connected | Event::NoIsolated));

    let tally = run_tally(spec.trials, bernoulli.len(), spec.workers, |i, acc| {
        let g = KeyGraph::build_indexed(spec.n, spec.theta, spec.seed, i).expect("validated");
        let summary = wants_summary.then(|| analysis::summarize(&g));
        for (slot, event) in bernoulli.iter().enumerate() {
            if event_holds(&g, event, summary) {
                acc.hits[slot] += 1;
            }
        }
        if wants_degree {
            acc.add_degree(g.degree(0));
        }
    })?;

    let estimates = bernoulli
        .iter()
        .zip(&tally.hits)
        .map(|(e, &hits)| EventEstimate {
            event: e.label(),
            estimate: EstimateWithCI::from_counts(hits, spec.trials),
        })
        .collect();
    let degree = wants_degree.then(|| DegreeEstimate::from_sums(spec.trials, tally.degree_sum, tally.degree_sq_sum));
    Ok(RunReport { estimates, degree })
}
