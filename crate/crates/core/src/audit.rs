//! Grid audit of the finite-n inequalities.
//!
//! Inequalities whose both sides are rational are compared exactly. Sides
//! involving `e^x` are compared in floating point with a `1e-12` relative
//! slack. Probabilities without a closed form (`P(C_r)`, `P(A_{n,r})`) come
//! from exhaustive enumeration when it is cheap and otherwise from Monte Carlo,
//! where the estimate minus three standard errors must stay below the bound.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use serde::Serialize;

use crate::combinatorics::{
    binomial, crude_a_bound, decomposition_bound, one_minus_q_bounds, q_theta, rational_to_f64, ratio_bounds,
    ratio_bounds_exact, ring_avoid_prob, ur_distribution, ur_tail_bound_exact, EXACT_THRESHOLD,
};
use crate::error::{Error, Result};
use crate::model::{sample_key_ring, splitmix64, Seed, Theta};
use crate::montecarlo::{brute_force, EstimateWithCI};

/// Relative slack for comparisons that go through `exp` or `ln`.
const FLOAT_SLACK: f64 = 1e-12;

/// Connectivity of `r` nodes is enumerated exactly when `C(P,K)^r` is at most this.
pub const EXACT_CONNECTIVITY_BUDGET: u64 = 200_000;

pub const CHECK_RATIO: &str = "ring_avoid_sandwich";
pub const CHECK_EDGE: &str = "edge_probability_sandwich";
pub const CHECK_CAYLEY: &str = "cayley";
pub const CHECK_TAIL_TIGHT: &str = "tail_tight";
pub const CHECK_TAIL_LOOSE: &str = "tail_loose";
pub const CHECK_CRUDE: &str = "crude_a_bound";
pub const CHECK_DECOMPOSITION: &str = "decomposition";

const CHECKS: [&str; 7] =
    [CHECK_RATIO, CHECK_EDGE, CHECK_CAYLEY, CHECK_TAIL_TIGHT, CHECK_TAIL_LOOSE, CHECK_CRUDE, CHECK_DECOMPOSITION];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AuditGrid {
    pub k_min: u32,
    pub k_max: u32,
    /// Overlap sizes for the ring-avoidance check; `l = 0` gives equality rows.
    pub l_min: u32,
    pub l_max: u32,
    pub p_min: u32,
    pub p_max: u32,
    pub r_min: u32,
    pub r_max: u32,
    /// Zero skips the Monte Carlo checks.
    pub mc_trials: u64,
    /// Graph size for the `P(A_{n,r})` estimates.
    pub mc_nodes: u32,
    pub seed: Seed,
    pub workers: Option<usize>,
}

impl Default for AuditGrid {
    fn default() -> Self {
        Self {
            k_min: 1,
            k_max: 6,
            l_min: 1,
            l_max: 6,
            p_min: 2,
            p_max: 40,
            r_min: 1,
            r_max: 6,
            mc_trials: 100_000,
            mc_nodes: 12,
            seed: Seed(0x6b65_7967_7261_7068),
            workers: None,
        }
    }
}

impl AuditGrid {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Domain(msg));
        if self.k_min == 0 || self.k_min > self.k_max {
            return bad(format!("need 1 <= k_min <= k_max, got {}..{}", self.k_min, self.k_max));
        }
        if self.l_min > self.l_max {
            return bad(format!("need l_min <= l_max, got {}..{}", self.l_min, self.l_max));
        }
        if self.p_min == 0 || self.p_min > self.p_max {
            return bad(format!("need 1 <= p_min <= p_max, got {}..{}", self.p_min, self.p_max));
        }
        if self.p_max > EXACT_THRESHOLD {
            return bad(format!("audit runs in exact arithmetic, p_max must be at most {EXACT_THRESHOLD}"));
        }
        if self.r_min == 0 || self.r_min > self.r_max {
            return bad(format!("need 1 <= r_min <= r_max, got {}..{}", self.r_min, self.r_max));
        }
        if self.mc_nodes > 32 || self.r_max >= self.mc_nodes {
            return bad(format!("need r_max < mc_nodes <= 32, got r_max={}, mc_nodes={}", self.r_max, self.mc_nodes));
        }
        Ok(())
    }
}

/// One compared pair of values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditRow {
    pub check: &'static str,
    pub k: u32,
    pub p: u32,
    pub l: Option<u32>,
    pub r: Option<u32>,
    pub x: Option<u32>,
    /// The side that must not exceed `rhs`.
    pub lhs: f64,
    pub rhs: f64,
    /// `"exact"`, `"float"` or `"monte_carlo"`.
    pub method: &'static str,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CheckSummary {
    pub checked: u64,
    pub tight: u64,
    pub violations: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub grid: AuditGrid,
    pub checks: BTreeMap<&'static str, CheckSummary>,
    pub violations: Vec<AuditRow>,
    /// Rows where the two sides are equal.
    pub tight: Vec<AuditRow>,
    /// `(K, P)` pairs simulated.
    pub mc_cells: u64,
    /// `(K, P, r)` cells whose connectivity was enumerated exactly.
    pub exact_connectivity_cells: u64,
}

impl AuditReport {
    pub fn total_violations(&self) -> u64 {
        self.checks.values().map(|c| c.violations).sum()
    }

    pub fn total_checked(&self) -> u64 {
        self.checks.values().map(|c| c.checked).sum()
    }
}

struct Recorder {
    checks: BTreeMap<&'static str, CheckSummary>,
    violations: Vec<AuditRow>,
    tight: Vec<AuditRow>,
}

#[derive(Clone, Copy)]
enum Verdict {
    Strict,
    Tight,
    Violated,
}

impl Recorder {
    fn new() -> Self {
        Self {
            checks: CHECKS.iter().map(|&c| (c, CheckSummary::default())).collect(),
            violations: Vec::new(),
            tight: Vec::new(),
        }
    }

    fn record(&mut self, row: AuditRow, verdict: Verdict) {
        let entry = self.checks.get_mut(row.check).expect("known check");
        entry.checked += 1;
        match verdict {
            Verdict::Strict => {}
            Verdict::Tight => {
                entry.tight += 1;
                self.tight.push(row);
            }
            Verdict::Violated => {
                entry.violations += 1;
                self.violations.push(row);
            }
        }
    }
}

fn exact_verdict(lhs: &BigRational, rhs: &BigRational) -> Verdict {
    match lhs.cmp(rhs) {
        std::cmp::Ordering::Less => Verdict::Strict,
        std::cmp::Ordering::Equal => Verdict::Tight,
        std::cmp::Ordering::Greater => Verdict::Violated,
    }
}

fn float_verdict(lhs: f64, rhs: f64) -> Verdict {
    let slack = FLOAT_SLACK * lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE);
    if (lhs - rhs).abs() <= slack {
        Verdict::Tight
    } else if lhs < rhs {
        Verdict::Strict
    } else {
        Verdict::Violated
    }
}

/// Monte Carlo lower end against a bound: tightness is not meaningful here.
fn mc_verdict(lower: f64, bound: f64) -> Verdict {
    if lower <= bound * (1.0 + FLOAT_SLACK) {
        Verdict::Strict
    } else {
        Verdict::Violated
    }
}

fn row(check: &'static str, theta: Theta, lhs: f64, rhs: f64, method: &'static str) -> AuditRow {
    AuditRow { check, k: theta.k(), p: theta.p(), l: None, r: None, x: None, lhs, rhs, method }
}

fn rat(r: &BigRational) -> f64 {
    rational_to_f64(r)
}

fn audit_ratio(rec: &mut Recorder, theta: Theta, l: u32) -> Result<()> {
    let (k, p) = (theta.k() as u64, theta.p() as u64);
    let avoid = ring_avoid_prob(p, l as u64, k)?;
    let exact = avoid.rational().expect("p within exact threshold").clone();
    let (lower, upper) = ratio_bounds_exact(p, l as u64, k)?;
    let bounds = ratio_bounds(p, l as u64, k)?;
    let with_l = |mut r: AuditRow| {
        r.l = Some(l);
        r
    };
    rec.record(with_l(row(CHECK_RATIO, theta, rat(&lower), rat(&exact), "exact")), exact_verdict(&lower, &exact));
    rec.record(with_l(row(CHECK_RATIO, theta, rat(&exact), rat(&upper), "exact")), exact_verdict(&exact, &upper));
    // in logs: ln C(p-l,k)/C(p,k) <= -kl/p
    let ln_bound = -(k as f64) * l as f64 / p as f64;
    let r = with_l(row(CHECK_RATIO, theta, avoid.float(), bounds.exp_upper, "float"));
    rec.record(r, float_verdict(avoid.log_value(), ln_bound));
    Ok(())
}

fn audit_edge(rec: &mut Recorder, theta: Theta) -> Result<()> {
    let edge = q_theta(theta).complement();
    let exact = edge.rational().expect("p within exact threshold").clone();
    let (lower, _) = one_minus_q_bounds(theta)?;
    let (k, p) = (theta.k() as i64, theta.p() as i64);
    let upper = BigRational::new(BigInt::from(k * k), BigInt::from(p - k));
    rec.record(row(CHECK_EDGE, theta, lower, rat(&exact), "float"), float_verdict(lower, rat(&exact)));
    rec.record(row(CHECK_EDGE, theta, rat(&exact), rat(&upper), "exact"), exact_verdict(&exact, &upper));
    Ok(())
}

fn audit_tails(rec: &mut Recorder, theta: Theta, r: u32) -> Result<()> {
    let dist = ur_distribution(theta, r)?;
    let top = (r * theta.k()).min(theta.p());
    for x in theta.k()..=top {
        let cdf = dist.cdf(x);
        let cdf = cdf.rational().expect("exact").clone();
        let (tight, loose) = ur_tail_bound_exact(theta, r, x)?.expect("exact");
        let at = |mut row_: AuditRow| {
            row_.r = Some(r);
            row_.x = Some(x);
            row_
        };
        rec.record(at(row(CHECK_TAIL_TIGHT, theta, rat(&cdf), rat(&tight), "exact")), exact_verdict(&cdf, &tight));
        rec.record(at(row(CHECK_TAIL_LOOSE, theta, rat(&tight), rat(&loose), "exact")), exact_verdict(&tight, &loose));
    }
    Ok(())
}

/// `r^{r-2} (1-q)^{r-1}` as a rational.
fn cayley_exact(theta: Theta, r: u32) -> BigRational {
    let edge = q_theta(theta).complement().rational().expect("exact").clone();
    let trees = if r >= 2 { BigInt::from(r).pow(r - 2) } else { BigInt::one() };
    BigRational::from_integer(trees) * num_traits::pow(edge, (r - 1) as usize)
}

fn enumerable(theta: Theta, r: u32) -> bool {
    let total = num_traits::pow(binomial(theta.p() as u64, theta.k() as u64), r as usize);
    total <= EXACT_CONNECTIVITY_BUDGET.into()
}

/// Hits for prefix connectivity and `A_{n,r}` of every prefix `r` in `2..=r_max`.
struct PrefixCounts {
    connected: Vec<EstimateWithCI>,
    a_event: Vec<EstimateWithCI>,
}

/// Ring bitmasks make the per-trial work a few word operations.
fn simulate_prefixes(theta: Theta, grid: &AuditGrid) -> Result<PrefixCounts> {
    let n = grid.mc_nodes as usize;
    let r_max = grid.r_max as usize;
    let seed = grid.seed.derive(splitmix64(((theta.k() as u64) << 32) | theta.p() as u64));
    let tally = crate::montecarlo::run_tally(grid.mc_trials, 2 * (r_max + 1), grid.workers, |i, acc| {
        let mut rng = seed.stream(i);
        let mut masks = [0u64; 32];
        for m in masks.iter_mut().take(n) {
            *m = sample_key_ring(theta, &mut rng).keys().iter().fold(0u64, |a, &k| a | (1 << k));
        }
        let mut adj = [0u32; 32];
        for a in 0..n {
            for b in a + 1..n {
                if masks[a] & masks[b] != 0 {
                    adj[a] |= 1 << b;
                    adj[b] |= 1 << a;
                }
            }
        }
        for r in 2..=r_max {
            let inside: u32 = (1 << r) - 1;
            let mut reach: u32 = 1;
            loop {
                let mut next = reach;
                let mut bits = reach;
                while bits != 0 {
                    let v = bits.trailing_zeros() as usize;
                    bits &= bits - 1;
                    next |= adj[v] & inside;
                }
                if next == reach {
                    break;
                }
                reach = next;
            }
            let connected = reach == inside;
            let escapes = (0..r).any(|v| adj[v] & !inside != 0);
            acc.hits[r] += connected as u64;
            acc.hits[r_max + 1 + r] += (connected && !escapes) as u64;
        }
    })?;
    let est = |slot: usize| EstimateWithCI::from_counts(tally.hits[slot], grid.mc_trials);
    Ok(PrefixCounts {
        connected: (0..=r_max).map(est).collect(),
        a_event: (0..=r_max).map(|r| est(r_max + 1 + r)).collect(),
    })
}

fn lower_3se(e: &EstimateWithCI) -> f64 {
    e.point - 3.0 * e.std_err()
}

fn upper_3se(e: &EstimateWithCI) -> f64 {
    (e.point + 3.0 * e.std_err()).max(e.ci_high).min(1.0)
}

fn audit_connectivity(rec: &mut Recorder, theta: Theta, grid: &AuditGrid, exact_cells: &mut u64) -> Result<bool> {
    let r_lo = grid.r_min.max(2);
    if r_lo > grid.r_max {
        return Ok(false);
    }
    let mut exact_cr: BTreeMap<u32, BigRational> = BTreeMap::new();
    for r in r_lo..=grid.r_max {
        if enumerable(theta, r) {
            let p = brute_force(r as usize, theta)?.p_connected;
            exact_cr.insert(r, p.rational().expect("exact").clone());
            *exact_cells += 1;
        }
    }
    let counts = if grid.mc_trials > 0 { Some(simulate_prefixes(theta, grid)?) } else { None };

    for r in r_lo..=grid.r_max {
        let at = |mut row_: AuditRow| {
            row_.r = Some(r);
            row_
        };
        let bound = cayley_exact(theta, r);
        if let Some(cr) = exact_cr.get(&r) {
            rec.record(at(row(CHECK_CAYLEY, theta, rat(cr), rat(&bound), "exact")), exact_verdict(cr, &bound));
        } else if let Some(c) = &counts {
            let lo = lower_3se(&c.connected[r as usize]);
            rec.record(at(row(CHECK_CAYLEY, theta, lo, rat(&bound), "monte_carlo")), mc_verdict(lo, rat(&bound)));
        }

        let Some(c) = &counts else { continue };
        let n = grid.mc_nodes;
        let a_lo = lower_3se(&c.a_event[r as usize]);
        let crude = crude_a_bound(n, r, theta)?.exp();
        rec.record(at(row(CHECK_CRUDE, theta, a_lo, crude, "monte_carlo")), mc_verdict(a_lo, crude));

        let cr_upper = exact_cr.get(&r).map(rat).unwrap_or_else(|| upper_3se(&c.connected[r as usize]));
        let dist = ur_distribution(theta, r)?;
        for x in 1..=(r * theta.k()).min(theta.p()) {
            let bound = decomposition_bound(n, r, theta, x, dist.cdf(x).float().min(1.0), cr_upper)?;
            let mut row_ = at(row(CHECK_DECOMPOSITION, theta, a_lo, bound, "monte_carlo"));
            row_.x = Some(x);
            rec.record(row_, mc_verdict(a_lo, bound));
        }
    }
    Ok(counts.is_some())
}

/// Runs every check over the grid.
pub fn run_audit(grid: &AuditGrid) -> Result<AuditReport> {
    grid.validate()?;
    let mut rec = Recorder::new();
    let mut mc_cells = 0;
    let mut exact_cells = 0;
    for p in grid.p_min..=grid.p_max {
        for k in grid.k_min..=grid.k_max.min(p) {
            let theta = Theta::new(k, p)?;
            for l in grid.l_min..=grid.l_max {
                if k + l <= p {
                    audit_ratio(&mut rec, theta, l)?;
                }
            }
            if !theta.is_complete() {
                audit_edge(&mut rec, theta)?;
            }
            for r in grid.r_min..=grid.r_max {
                audit_tails(&mut rec, theta, r)?;
            }
            if audit_connectivity(&mut rec, theta, grid, &mut exact_cells)? {
                mc_cells += 1;
            }
        }
    }
    Ok(AuditReport {
        grid: *grid,
        checks: rec.checks,
        violations: rec.violations,
        tight: rec.tight,
        mc_cells,
        exact_connectivity_cells: exact_cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinatorics::cayley_bound;

    fn small() -> AuditGrid {
        AuditGrid { p_max: 12, k_max: 3, l_max: 3, r_max: 4, mc_trials: 2_000, mc_nodes: 8, ..AuditGrid::default() }
    }

    #[test]
    fn small_grid_has_no_violations() {
        let report = run_audit(&small()).unwrap();
        assert_eq!(report.total_violations(), 0, "{:?}", report.violations);
        for c in CHECKS {
            assert!(report.checks[c].checked > 0, "{c} never ran");
        }
        assert!(report.exact_connectivity_cells > 0);
        assert!(report.mc_cells > 0);
    }

    #[test]
    fn zero_overlap_rows_are_tight() {
        let grid = AuditGrid { l_min: 0, l_max: 0, mc_trials: 0, ..small() };
        let report = run_audit(&grid).unwrap();
        let ratio_tight = report.tight.iter().filter(|r| r.check == CHECK_RATIO && r.l == Some(0)).count();
        // every (K, P) pair contributes three equalities at l = 0
        assert_eq!(ratio_tight as u64, report.checks[CHECK_RATIO].checked);
    }

    #[test]
    fn full_tail_rows_are_included() {
        let report = run_audit(&AuditGrid { mc_trials: 0, ..small() }).unwrap();
        // x = P with r K >= P: P(U_r <= P) = 1 = tight bound
        assert!(report.tight.iter().any(|r| r.check == CHECK_TAIL_TIGHT && r.x == Some(r.p)));
    }

    #[test]
    fn grid_validation() {
        assert!(AuditGrid { p_max: 65, ..small() }.validate().is_err());
        assert!(AuditGrid { r_max: 8, ..small() }.validate().is_err());
        assert!(AuditGrid { k_min: 0, ..small() }.validate().is_err());
        assert!(AuditGrid::default().validate().is_ok());
    }

    #[test]
    fn cayley_exact_matches_log_form() {
        let theta = Theta::new(2, 10).unwrap();
        for r in 2..=5 {
            let exact = rat(&cayley_exact(theta, r)).ln();
            assert!((exact - cayley_bound(theta, r).unwrap()).abs() < 1e-12);
        }
    }
}
