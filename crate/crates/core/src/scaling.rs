//! Parameter scalings `n -> (K_n, P_n)`, the deviation function
//! `α_n = n K_n² / P_n - ln n`, admissibility diagnostics and the reduction to
//! a scaling whose deviation grows no faster than `ln n`.
//!
//! Limits (`α_n → ∞`, `α_n = o(n)`) cannot be observed on a finite window;
//! everything here reports per-n values and monotone trends only.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::combinatorics::{q_theta, ExactProb};
use crate::error::{Error, Result};
use crate::model::Theta;

/// JSON object keys are strings, and tagged enums buffer them before the
/// target type is known, so table keys are parsed by hand.
fn numeric_keys<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<BTreeMap<u64, u32>, D::Error> {
    let raw = BTreeMap::<String, u32>::deserialize(d)?;
    raw.into_iter()
        .map(|(k, v)| {
            k.trim()
                .parse::<u64>()
                .map(|k| (k, v))
                .map_err(|_| serde::de::Error::custom(format!("table key {k:?} is not a node count")))
        })
        .collect()
}

/// How the pool size grows with `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PoolRule {
    /// `P_n = ⌈c·n⌉`.
    Linear { c: f64 },
    Constant { p: u32 },
    Table {
        #[serde(deserialize_with = "numeric_keys")]
        values: BTreeMap<u64, u32>,
    },
}

impl PoolRule {
    pub fn pool(&self, n: u64) -> Result<u32> {
        let p = match self {
            PoolRule::Linear { c } => {
                if !(*c > 0.0) {
                    return Err(Error::Domain(format!("linear pool rule needs c > 0, got {c}")));
                }
                (c * n as f64).ceil() as u32
            }
            PoolRule::Constant { p } => *p,
            PoolRule::Table { values } => *values
                .get(&n)
                .ok_or_else(|| Error::Domain(format!("pool table has no entry for n = {n}")))?,
        };
        if p == 0 {
            return Err(Error::Domain(format!("pool size is zero at n = {n}")));
        }
        Ok(p)
    }
}

/// How the ring size is chosen for each `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RingRule {
    /// Target a constant deviation through [`k_from_alpha`].
    Alpha { alpha: f64 },
    /// Target `α_n = coef · n^exponent`.
    AlphaPower { coef: f64, exponent: f64 },
    Constant { k: u32 },
    Table {
        #[serde(deserialize_with = "numeric_keys")]
        values: BTreeMap<u64, u32>,
    },
}

impl RingRule {
    fn target_alpha(&self, n: u64) -> Option<f64> {
        match self {
            RingRule::Alpha { alpha } => Some(*alpha),
            RingRule::AlphaPower { coef, exponent } => Some(coef * (n as f64).powf(*exponent)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaling {
    pub pool: PoolRule,
    pub ring: RingRule,
}

/// A scaling evaluated at one `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingPoint {
    pub n: u64,
    pub k: u32,
    pub p: u32,
    /// Deviation actually realized by the integer pair `(k, p)`.
    pub alpha: f64,
    pub target_alpha: Option<f64>,
    pub clamped: bool,
}

impl ScalingPoint {
    pub fn theta(&self) -> Result<Theta> {
        Theta::new(self.k, self.p)
    }
}

impl Scaling {
    pub fn eval(&self, n: u64) -> Result<ScalingPoint> {
        let p = self.pool.pool(n)?;
        let target_alpha = self.ring.target_alpha(n);
        let (k, clamped) = match &self.ring {
            RingRule::Constant { k } => (*k, false),
            RingRule::Table { values } => (
                *values
                    .get(&n)
                    .ok_or_else(|| Error::Domain(format!("ring table has no entry for n = {n}")))?,
                false,
            ),
            _ => {
                let fit = k_from_alpha(n, p, target_alpha.unwrap())?;
                (fit.k, fit.clamped())
            }
        };
        let theta = Theta::new(k, p)?;
        Ok(ScalingPoint { n, k, p, alpha: deviation(n, theta), target_alpha, clamped })
    }
}

/// `n K² / P - ln n`.
pub fn deviation(n: u64, theta: Theta) -> f64 {
    let k = theta.k() as f64;
    n as f64 * k * k / theta.p() as f64 - (n as f64).ln()
}

/// Smallest integer ring size reaching a requested deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlphaFit {
    pub k: u32,
    pub realized_alpha: f64,
    /// `√(P(ln n + α)/n) < 1`, so `k` was raised to 1.
    pub clamped_low: bool,
    /// The requested ring would exceed the pool, so `k = P`.
    pub clamped_high: bool,
}

impl AlphaFit {
    pub fn clamped(&self) -> bool {
        self.clamped_low || self.clamped_high
    }

    pub fn admissible(&self) -> bool {
        self.k >= 2
    }
}

/// `⌈√t⌉` that does not step past an exact integer root because of rounding.
fn ceil_sqrt(t: f64) -> f64 {
    let c = t.sqrt().ceil();
    if c >= 2.0 && ((c - 1.0) * (c - 1.0) - t).abs() <= 1e-12 * t {
        c - 1.0
    } else {
        c
    }
}

/// `k = ⌈√(p (ln n + α) / n)⌉`, at least 1 and at most `p`.
pub fn k_from_alpha(n: u64, p: u32, alpha: f64) -> Result<AlphaFit> {
    if n < 2 || p == 0 {
        return Err(Error::Domain(format!("k_from_alpha needs n >= 2 and p >= 1, got n={n}, p={p}")));
    }
    let radicand = (n as f64).ln() + alpha;
    if !(radicand > 0.0) {
        return Err(Error::Domain(format!(
            "ln n + alpha must be positive, got ln({n}) + {alpha} = {radicand}"
        )));
    }
    let t = p as f64 * radicand / n as f64;
    let raw = ceil_sqrt(t);
    let clamped_low = t < 1.0;
    let clamped_high = raw > p as f64;
    let k = raw.clamp(1.0, p as f64) as u32;
    let realized_alpha = deviation(n, Theta::new(k, p)?);
    Ok(AlphaFit { k, realized_alpha, clamped_low, clamped_high })
}

/// Per-n diagnostics of a scaling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeviationReport {
    pub n: u64,
    pub k: u32,
    pub p: u32,
    pub alpha: f64,
    /// `K² / P`.
    pub realized_ratio: f64,
    pub k_over_p: f64,
    pub alpha_over_n: f64,
    /// `K_n >= 2`.
    pub admissible: bool,
    pub k_le_p: bool,
    /// `P_n >= σ n`.
    pub sigma_floor: bool,
    /// Admissible and `α_n / n` has not grown since the previous window point.
    pub strongly_admissible_window: bool,
}

/// Monotone trends over the window. These are observations, not limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowTrend {
    pub all_admissible: bool,
    pub all_sigma_floor: bool,
    pub alpha_nondecreasing: bool,
    pub alpha_over_n_nonincreasing: bool,
    pub ratio_nonincreasing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub sigma: f64,
    pub rows: Vec<DeviationReport>,
    pub trend: WindowTrend,
}

fn report_rows(points: &[ScalingPoint], sigma: f64) -> Vec<DeviationReport> {
    let mut rows: Vec<DeviationReport> = Vec::with_capacity(points.len());
    for pt in points {
        let (k, p, n) = (pt.k as f64, pt.p as f64, pt.n as f64);
        let alpha_over_n = pt.alpha / n;
        let shrinking = rows.last().is_none_or(|prev| alpha_over_n <= prev.alpha_over_n);
        let admissible = pt.k >= 2;
        rows.push(DeviationReport {
            n: pt.n,
            k: pt.k,
            p: pt.p,
            alpha: pt.alpha,
            realized_ratio: k * k / p,
            k_over_p: k / p,
            alpha_over_n,
            admissible,
            k_le_p: pt.k <= pt.p,
            sigma_floor: p >= sigma * n,
            strongly_admissible_window: admissible && shrinking,
        });
    }
    rows
}

/// Flags admissibility, the σ-floor and the ratio diagnostics on each `n`.
pub fn classify(s: &Scaling, ns: &[u64], sigma: f64) -> Result<Classification> {
    let points = ns.iter().map(|&n| s.eval(n)).collect::<Result<Vec<_>>>()?;
    let rows = report_rows(&points, sigma);
    let pairs = || rows.windows(2).map(|w| (&w[0], &w[1]));
    let trend = WindowTrend {
        all_admissible: rows.iter().all(|r| r.admissible),
        all_sigma_floor: rows.iter().all(|r| r.sigma_floor),
        alpha_nondecreasing: pairs().all(|(a, b)| b.alpha >= a.alpha),
        alpha_over_n_nonincreasing: pairs().all(|(a, b)| b.alpha_over_n <= a.alpha_over_n),
        ratio_nonincreasing: pairs().all(|(a, b)| b.realized_ratio <= a.realized_ratio),
    };
    Ok(Classification { sigma, rows, trend })
}

/// One `n` of the reduction: `α* = min(α, ln n)` and `K̃ = ⌈√(P(ln n + α*)/n)⌉`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReductionRow {
    pub n: u64,
    pub p: u32,
    pub k: u32,
    pub alpha: f64,
    pub alpha_star: f64,
    pub k_reduced: u32,
    pub alpha_reduced: f64,
    pub k_reduced_le_k: bool,
    pub alpha_star_le_reduced: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Reduction {
    pub scaling: Scaling,
    pub rows: Vec<ReductionRow>,
    pub reports: Vec<DeviationReport>,
}

/// Caps the deviation at `ln n` while keeping `P_n`, giving ring sizes no
/// larger than the original ones.
pub fn reduce_scaling(s: &Scaling, ns: &[u64]) -> Result<Reduction> {
    let mut rows = Vec::with_capacity(ns.len());
    let mut reduced_points = Vec::with_capacity(ns.len());
    let mut table = BTreeMap::new();
    for &n in ns {
        let pt = s.eval(n)?;
        let alpha_star = pt.alpha.min((n as f64).ln());
        // ln n + α* = min(n K²/P, 2 ln n) > 0, so the fit cannot fail
        let fit = k_from_alpha(n, pt.p, alpha_star)?;
        table.insert(n, fit.k);
        rows.push(ReductionRow {
            n,
            p: pt.p,
            k: pt.k,
            alpha: pt.alpha,
            alpha_star,
            k_reduced: fit.k,
            alpha_reduced: fit.realized_alpha,
            k_reduced_le_k: fit.k <= pt.k,
            alpha_star_le_reduced: alpha_star <= fit.realized_alpha + 1e-9 * alpha_star.abs().max(1.0),
        });
        reduced_points.push(ScalingPoint {
            n,
            k: fit.k,
            p: pt.p,
            alpha: fit.realized_alpha,
            target_alpha: Some(alpha_star),
            clamped: fit.clamped(),
        });
    }
    Ok(Reduction {
        scaling: Scaling { pool: s.pool.clone(), ring: RingRule::Table { values: table } },
        rows,
        reports: report_rows(&reduced_points, 0.0),
    })
}

/// Edge probability of the Erdős–Rényi graph matched to `theta`: `1 - q(θ)`.
pub fn matched_er_p(theta: Theta) -> ExactProb {
    q_theta(theta).complement()
}

/// `(1 - q(θ)) / (K²/P)`, which tends to one as `K²/P → 0`.
pub fn equivalence_ratio(theta: Theta) -> f64 {
    let k = theta.k() as f64;
    matched_er_p(theta).float() / (k * k / theta.p() as f64)
}

/// The default diagnostic window `{10², 10³, 10⁴, 10⁵}`.
pub const DEFAULT_WINDOW: [u64; 4] = [100, 1_000, 10_000, 100_000];
