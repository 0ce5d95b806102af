//! Exact and log-space evaluation of the probabilities of the random key graph
//! model and of the finite-n inequalities that bound them.
//!
//! Every probability is returned as an [`ExactProb`]. When the pool size is at
//! most [`EXACT_THRESHOLD`] the value carries an exact big-integer rational;
//! the `float` and `log` fields always come from an independent
//! floating-point route (products of ratios, `ln_1p`, Stirling sums), so the
//! two can be checked against each other.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::model::Theta;

/// Pool sizes up to this value get exact rationals.
pub const EXACT_THRESHOLD: u32 = 64;

/// Float-mode pmf entries below this are dropped.
const PMF_FLOOR: f64 = 1e-300;

/// A probability with an optional exact rational, a double, and its natural log.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactProb {
    rational: Option<BigRational>,
    float: f64,
    log: f64,
}

impl ExactProb {
    pub fn zero() -> Self {
        Self { rational: Some(BigRational::zero()), float: 0.0, log: f64::NEG_INFINITY }
    }

    pub fn one() -> Self {
        Self { rational: Some(BigRational::one()), float: 1.0, log: 0.0 }
    }

    /// Float and log derived from the rational itself.
    pub fn from_rational(r: BigRational) -> Self {
        let float = rational_to_f64(&r);
        let log = ln_rational(&r);
        Self { rational: Some(r), float, log }
    }

    pub fn from_float(float: f64) -> Self {
        Self { rational: None, float, log: float.ln() }
    }

    fn assemble(rational: Option<BigRational>, float: f64, log: Option<f64>) -> Self {
        let log = match log {
            Some(l) => l,
            None if float > 0.0 => float.ln(),
            None => rational.as_ref().map_or(f64::NEG_INFINITY, ln_rational),
        };
        Self { rational, float, log }
    }

    pub fn rational(&self) -> Option<&BigRational> {
        self.rational.as_ref()
    }

    pub fn float(&self) -> f64 {
        self.float
    }

    pub fn log_value(&self) -> f64 {
        self.log
    }

    /// `num/den`, or `0` / `1` for the integers.
    pub fn rational_string(&self) -> Option<String> {
        self.rational.as_ref().map(format_rational)
    }

    /// `1 - self`. The float side goes through `expm1` so that values of the
    /// complement near zero keep their relative precision.
    pub fn complement(&self) -> Self {
        let rational = self.rational.as_ref().map(|r| BigRational::one() - r);
        let float = if self.log == f64::NEG_INFINITY { 1.0 } else { -self.log.exp_m1() };
        Self::assemble(rational, float, None)
    }

    /// Relative gap between the float route and the exact rational, if present.
    pub fn relative_gap(&self) -> Option<f64> {
        let exact = rational_to_f64(self.rational.as_ref()?);
        if exact == 0.0 {
            return Some(self.float.abs());
        }
        Some(((self.float - exact) / exact).abs())
    }
}

impl Serialize for ExactProb {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("ExactProb", 3)?;
        st.serialize_field("rational", &self.rational_string())?;
        st.serialize_field("float", &self.float)?;
        st.serialize_field("log", &self.log)?;
        st.end()
    }
}

pub fn format_rational(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub(crate) fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or_else(|| ln_rational(r).exp())
}

fn ln_big(x: &BigUint) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    if bits <= 1000 {
        x.to_f64().unwrap().ln()
    } else {
        let shift = bits - 64;
        (x >> shift).to_f64().unwrap().ln() + shift as f64 * std::f64::consts::LN_2
    }
}

fn ln_rational(r: &BigRational) -> f64 {
    if !r.is_positive() {
        return f64::NEG_INFINITY;
    }
    ln_big(r.numer().magnitude()) - ln_big(r.denom().magnitude())
}

pub(crate) fn big_ratio(num: BigUint, den: BigUint) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Exact `C(n, k)`, zero when `k > n`.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 1..=k {
        acc *= n - k + i;
        acc /= i;
    }
    acc
}

/// `ln n!` exactly summed for small `n`, Stirling series beyond.
fn ln_factorial(n: u64) -> f64 {
    if n < 32 {
        return (2..=n).map(|i| (i as f64).ln()).sum();
    }
    let x = n as f64;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    x * x.ln() - x + 0.5 * (std::f64::consts::TAU * x).ln()
        + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0)))
}

/// Floating-point `ln C(n, k)` that never touches big integers.
pub(crate) fn ln_binomial_float(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let m = k.min(n - k);
    if m <= 64 {
        (1..=m).map(|i| ((n - m + i) as f64 / i as f64).ln()).sum()
    } else {
        ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
    }
}

/// Natural log of `C(n, k)`; `-inf` when `k > n`. Exact big-integer evaluation
/// for `n <= EXACT_THRESHOLD`.
pub fn log_binomial(n: u64, k: u64) -> f64 {
    if k > n {
        f64::NEG_INFINITY
    } else if n <= EXACT_THRESHOLD as u64 {
        ln_big(&binomial(n, k))
    } else {
        ln_binomial_float(n, k)
    }
}

/// `ln(C(p-l, k) / C(p, k))` as `Σ ln(1 - l/(p-i))`; requires `l + k <= p`.
fn ln_avoid(p: u64, l: u64, k: u64) -> f64 {
    (0..k).map(|i| (-(l as f64) / (p - i) as f64).ln_1p()).sum()
}

fn avoid_rational(p: u64, l: u64, k: u64) -> BigRational {
    big_ratio(binomial(p - l, k), binomial(p, k))
}

/// Probability that a random `k`-ring avoids a fixed `l`-subset of a pool of `p`
/// keys: `C(p-l, k) / C(p, k)`, and zero when `l > p - k`.
pub fn ring_avoid_prob(p: u64, l: u64, k: u64) -> Result<ExactProb> {
    if k > p || l > p {
        return Err(Error::Domain(format!(
            "ring_avoid_prob needs k <= p and l <= p, got p={p}, l={l}, k={k}"
        )));
    }
    if l + k > p {
        return Ok(ExactProb::zero());
    }
    let rational = (p <= EXACT_THRESHOLD as u64).then(|| avoid_rational(p, l, k));
    let float: f64 = (0..k).map(|i| 1.0 - l as f64 / (p - i) as f64).product();
    Ok(ExactProb::assemble(rational, float, Some(ln_avoid(p, l, k))))
}

/// Probability that two independent rings are disjoint.
pub fn q_theta(theta: Theta) -> ExactProb {
    if theta.is_complete() {
        return ExactProb::zero();
    }
    let (k, p) = (theta.k() as u64, theta.p() as u64);
    ring_avoid_prob(p, k, k).expect("2K <= P")
}

/// Lower, exponential and polynomial upper bounds on `C(p-l, k) / C(p, k)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatioBounds {
    pub lower: f64,
    pub exp_upper: f64,
    pub upper: f64,
}

fn check_ratio_domain(p: u64, l: u64, k: u64) -> Result<()> {
    if k + l > p {
        return Err(Error::Domain(format!("ratio bounds need k + l <= p, got p={p}, l={l}, k={k}")));
    }
    Ok(())
}

/// `((1 - l/(p-k))^k, e^{-kl/p}, (1 - l/p)^k)`.
pub fn ratio_bounds(p: u64, l: u64, k: u64) -> Result<RatioBounds> {
    check_ratio_domain(p, l, k)?;
    if l == 0 {
        return Ok(RatioBounds { lower: 1.0, exp_upper: 1.0, upper: 1.0 });
    }
    let (pf, lf, kf) = (p as f64, l as f64, k as f64);
    Ok(RatioBounds {
        lower: (1.0 - lf / (pf - kf)).powi(k as i32),
        exp_upper: (-kf * lf / pf).exp(),
        upper: (1.0 - lf / pf).powi(k as i32),
    })
}

/// Exact rational `(lower, upper)` polynomial bounds for the audit.
pub fn ratio_bounds_exact(p: u64, l: u64, k: u64) -> Result<(BigRational, BigRational)> {
    check_ratio_domain(p, l, k)?;
    if l == 0 {
        return Ok((BigRational::one(), BigRational::one()));
    }
    let pow = |num: u64, den: u64| big_ratio(BigUint::from(num).pow(k as u32), BigUint::from(den).pow(k as u32));
    Ok((pow(p - k - l, p - k), pow(p - l, p)))
}

/// `(1 - e^{-K²/P}, K²/(P-K))`, which sandwich `1 - q(θ)` when `2K <= P`.
pub fn one_minus_q_bounds(theta: Theta) -> Result<(f64, f64)> {
    if theta.is_complete() {
        return Err(Error::Domain(format!("1 - q bounds need 2K <= P, got {theta}")));
    }
    let (k, p) = (theta.k() as f64, theta.p() as f64);
    Ok((-(-k * k / p).exp_m1(), k * k / (p - k)))
}

/// Exact law of the number of distinct keys held by `r` nodes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UrDistribution {
    pub theta: Theta,
    pub r: u32,
    pub pmf: BTreeMap<u32, ExactProb>,
}

impl UrDistribution {
    pub fn pmf(&self, u: u32) -> ExactProb {
        self.pmf.get(&u).cloned().unwrap_or_else(ExactProb::zero)
    }

    /// `P(U_r <= x)`.
    pub fn cdf(&self, x: u32) -> ExactProb {
        let mut rational = self.pmf.values().next().and_then(|p| p.rational.as_ref()).map(|_| BigRational::zero());
        let mut float = 0.0;
        for (_, p) in self.pmf.range(..=x) {
            float += p.float;
            if let (Some(acc), Some(r)) = (rational.as_mut(), p.rational.as_ref()) {
                *acc += r;
            }
        }
        ExactProb::assemble(rational, float.min(1.0), None)
    }

    pub fn total_float(&self) -> f64 {
        self.pmf.values().map(|p| p.float).sum()
    }

    pub fn total_rational(&self) -> Option<BigRational> {
        self.pmf.values().map(|p| p.rational.clone()).sum()
    }
}

/// Forward recursion over `r`: a fresh ring overlaps the current union of `u`
/// keys in `j` keys with hypergeometric probability
/// `C(u, j) C(P-u, K-j) / C(P, K)`, moving the union to `u + K - j`.
pub fn ur_distribution(theta: Theta, r: u32) -> Result<UrDistribution> {
    if r == 0 {
        return Err(Error::Domain("U_r needs r >= 1".into()));
    }
    let (k, p) = (theta.k() as u64, theta.p() as u64);
    let exact = theta.p() <= EXACT_THRESHOLD;

    let ln_total = ln_binomial_float(p, k);
    let mut float: BTreeMap<u64, f64> = BTreeMap::from([(k, 1.0)]);
    let mut rational: BTreeMap<u64, BigRational> = BTreeMap::new();
    let mut overlap_cache: BTreeMap<u64, Vec<(u64, BigRational)>> = BTreeMap::new();
    if exact {
        rational.insert(k, BigRational::one());
    }

    for _ in 1..r {
        let mut next: BTreeMap<u64, f64> = BTreeMap::new();
        for (&u, &mass) in &float {
            let j_min = k.saturating_sub(p - u);
            for j in j_min..=k.min(u) {
                let w = (ln_binomial_float(u, j) + ln_binomial_float(p - u, k - j) - ln_total).exp();
                *next.entry(u + k - j).or_default() += mass * w;
            }
        }
        next.retain(|_, m| *m >= PMF_FLOOR);
        float = next;

        if exact {
            let total = binomial(p, k);
            let mut next: BTreeMap<u64, BigRational> = BTreeMap::new();
            for (&u, mass) in &rational {
                let moves = overlap_cache.entry(u).or_insert_with(|| {
                    let j_min = k.saturating_sub(p - u);
                    (j_min..=k.min(u))
                        .map(|j| {
                            let w = big_ratio(binomial(u, j) * binomial(p - u, k - j), total.clone());
                            (u + k - j, w)
                        })
                        .collect()
                });
                for (to, w) in moves.iter() {
                    *next.entry(*to).or_insert_with(BigRational::zero) += mass * w;
                }
            }
            rational = next;
        }
    }

    let mut pmf = BTreeMap::new();
    if exact {
        for (u, r) in rational {
            let f = float.get(&u).copied().unwrap_or(0.0);
            pmf.insert(u as u32, ExactProb::assemble(Some(r), f, None));
        }
    } else {
        for (u, f) in float {
            pmf.insert(u as u32, ExactProb::assemble(None, f, None));
        }
    }
    Ok(UrDistribution { theta, r, pmf })
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

/// Probability that nodes `1..=r` are isolated from the other `n - r` nodes.
pub fn isolation_prob(n: u32, r: u32, theta: Theta) -> Result<ExactProb> {
    if r == 0 || r >= n {
        return Err(Error::Domain(format!("isolation_prob needs 1 <= r < n, got r={r}, n={n}")));
    }
    let dist = ur_distribution(theta, r)?;
    let (k, p) = (theta.k() as u64, theta.p() as u64);
    let others = (n - r) as i32;

    let mut rational = (theta.p() <= EXACT_THRESHOLD).then(BigRational::zero);
    let mut float = 0.0;
    let mut logs = Vec::new();
    for (&u, mass) in &dist.pmf {
        let u = u as u64;
        if u + k > p {
            continue;
        }
        let ln_avoid_all = others as f64 * ln_avoid(p, u, k);
        float += mass.float * ln_avoid_all.exp();
        logs.push(mass.log + ln_avoid_all);
        if let (Some(acc), Some(m)) = (rational.as_mut(), mass.rational.as_ref()) {
            *acc += m * num_traits::pow(avoid_rational(p, u, k), others as usize);
        }
    }
    Ok(ExactProb::assemble(rational, float, Some(log_sum_exp(&logs))))
}

/// `(1 - q)^{r-1}`: any fixed spanning tree on `r` nodes is present.
pub fn tree_prob(theta: Theta, r: u32) -> Result<ExactProb> {
    if r == 0 {
        return Err(Error::Domain("tree_prob needs r >= 1".into()));
    }
    let edge = q_theta(theta).complement();
    let e = (r - 1) as usize;
    let rational = edge.rational.as_ref().map(|x| num_traits::pow(x.clone(), e));
    Ok(ExactProb::assemble(rational, edge.float.powi(e as i32), Some(e as f64 * edge.log)))
}

/// `ln(r^{r-2} (1 - q)^{r-1})`, an upper bound on the probability that `r`
/// given nodes induce a connected subgraph.
pub fn cayley_bound(theta: Theta, r: u32) -> Result<f64> {
    if r < 2 {
        return Err(Error::Domain(format!("cayley_bound needs r >= 2, got {r}")));
    }
    let rf = r as f64;
    let ln_edge = q_theta(theta).complement().log;
    let trees = if r == 2 { 0.0 } else { (rf - 2.0) * rf.ln() };
    Ok(trees + (rf - 1.0) * ln_edge)
}

/// Logs of the two upper bounds on `P(U_r <= x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailBound {
    pub tight: f64,
    pub loose: f64,
}

fn check_tail_domain(theta: Theta, r: u32, x: u32) -> Result<()> {
    if r == 0 {
        return Err(Error::Domain("tail bound needs r >= 1".into()));
    }
    let top = (r as u64 * theta.k() as u64).min(theta.p() as u64);
    if x as u64 > top {
        return Err(Error::Domain(format!("tail bound needs x <= min(rK, P) = {top}, got {x}")));
    }
    Ok(())
}

/// `ln[C(P,x) (C(x,K)/C(P,K))^r]` and the looser `ln[C(P,x) (x/P)^{rK}]`.
/// Below `x = K` both are `-inf`, since `U_r >= K` always.
pub fn ur_tail_bound(theta: Theta, r: u32, x: u32) -> Result<TailBound> {
    check_tail_domain(theta, r, x)?;
    if x < theta.k() {
        return Ok(TailBound { tight: f64::NEG_INFINITY, loose: f64::NEG_INFINITY });
    }
    let (k, p, x) = (theta.k() as u64, theta.p() as u64, x as u64);
    let lead = log_binomial(p, x);
    Ok(TailBound {
        tight: lead + r as f64 * (log_binomial(x, k) - log_binomial(p, k)),
        loose: lead + (r as u64 * k) as f64 * (x as f64 / p as f64).ln(),
    })
}

/// Exact rational `(tight, loose)` tail bounds; `None` above the exact threshold.
pub fn ur_tail_bound_exact(theta: Theta, r: u32, x: u32) -> Result<Option<(BigRational, BigRational)>> {
    check_tail_domain(theta, r, x)?;
    if theta.p() > EXACT_THRESHOLD {
        return Ok(None);
    }
    if x < theta.k() {
        return Ok(Some((BigRational::zero(), BigRational::zero())));
    }
    let (k, p, xu) = (theta.k() as u64, theta.p() as u64, x as u64);
    let lead = BigRational::from_integer(BigInt::from(binomial(p, xu)));
    let tight = &lead * num_traits::pow(big_ratio(binomial(xu, k), binomial(p, k)), r as usize);
    let loose = lead * num_traits::pow(big_ratio(BigUint::from(xu), BigUint::from(p)), (r * theta.k()) as usize);
    Ok(Some((tight, loose)))
}

/// `P(U_r <= x) e^{-(n-r)K²/P} + P(C_r) e^{-(n-r)(K/P)(x+1)}`, an upper bound
/// on `P(A_{n,r})` when fed those probabilities or upper bounds of them.
pub fn decomposition_bound(n: u32, r: u32, theta: Theta, x: u32, prob_er: f64, prob_cr: f64) -> Result<f64> {
    if r == 0 || r >= n {
        return Err(Error::Domain(format!("decomposition bound needs 1 <= r < n, got r={r}, n={n}")));
    }
    if x == 0 {
        return Err(Error::Domain("decomposition bound needs x >= 1".into()));
    }
    for (name, v) in [("P(U_r <= x)", prob_er), ("P(C_r)", prob_cr)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::Domain(format!("{name} = {v} is not a probability")));
        }
    }
    let (k, p) = (theta.k() as f64, theta.p() as f64);
    let rest = (n - r) as f64;
    Ok(prob_er * (-rest * k * k / p).exp() + prob_cr * (-rest * (k / p) * (x as f64 + 1.0)).exp())
}

/// `ln[r^{r-2} (1-q)^{r-1} e^{-(n-r)K²/P}]`, the crude bound on `P(A_{n,r})`.
pub fn crude_a_bound(n: u32, r: u32, theta: Theta) -> Result<f64> {
    if r < 2 || r >= n {
        return Err(Error::Domain(format!("crude bound needs 2 <= r < n, got r={r}, n={n}")));
    }
    let (k, p) = (theta.k() as f64, theta.p() as f64);
    Ok(cayley_bound(theta, r)? - (n - r) as f64 * k * k / p)
}

/// `(r(θ), r_n(θ)) = (⌊P/K⌋ - 1, min(r(θ), ⌊n/2⌋))`.
pub fn r_threshold(theta: Theta, n: u32) -> Result<(u32, u32)> {
    if n < 2 {
        return Err(Error::Domain(format!("r_threshold needs n >= 2, got {n}")));
    }
    let r = theta.p() / theta.k() - 1;
    Ok((r, r.min(n / 2)))
}

/// `Σ_{r=2}^{⌊n/2⌋} C(n,r) prob_a[r]`, accumulated in log space.
pub fn union_bound_rhs(n: u32, prob_a: &BTreeMap<u32, f64>) -> Result<f64> {
    let mut logs = Vec::new();
    for r in 2..=n / 2 {
        let pa = *prob_a
            .get(&r)
            .ok_or_else(|| Error::Domain(format!("union bound is missing the r = {r} term")))?;
        if pa < 0.0 {
            return Err(Error::Domain(format!("negative probability {pa} for r = {r}")));
        }
        logs.push(log_binomial(n as u64, r as u64) + pa.ln());
    }
    Ok(log_sum_exp(&logs).exp())
}
