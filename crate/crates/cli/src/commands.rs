use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use keygraph::audit::{run_audit, AuditGrid};
use keygraph::combinatorics::{
    cayley_bound, isolation_prob, one_minus_q_bounds, q_theta, r_threshold, ratio_bounds, ratio_bounds_exact,
    ring_avoid_prob, tree_prob, ur_distribution, ur_tail_bound, ur_tail_bound_exact, format_rational,
};
use keygraph::montecarlo::{brute_force, brute_force_with_events, er_simulate, run_trials, sweep, ExperimentSpec, SweepRow};
use keygraph::scaling::{matched_er_p, PoolRule};
use keygraph::{Seed, Theta};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::events::parse_events;
use crate::output::{emit, Format, OutputRecord, SCHEMA_VERSION};

/// What `main` turns into an exit code.
pub enum Outcome {
    Ok,
    Violations,
}

fn need<T>(value: Option<T>, flag: &str, sub: &str) -> Result<T> {
    match value {
        Some(v) => Ok(v),
        None => bail!("`exact {sub}` requires --{flag}"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ExactKind {
    Q,
    Avoid,
    Bounds,
    Ur,
    Isolation,
    Tree,
    Cayley,
    Tail,
    Threshold,
}

impl ExactKind {
    fn name(self) -> &'static str {
        match self {
            ExactKind::Q => "q",
            ExactKind::Avoid => "avoid",
            ExactKind::Bounds => "bounds",
            ExactKind::Ur => "ur",
            ExactKind::Isolation => "isolation",
            ExactKind::Tree => "tree",
            ExactKind::Cayley => "cayley",
            ExactKind::Tail => "tail",
            ExactKind::Threshold => "threshold",
        }
    }
}

#[derive(Debug, Args)]
pub struct ExactArgs {
    #[arg(value_enum)]
    pub kind: ExactKind,
    /// Ring size K.
    #[arg(long)]
    pub k: Option<u32>,
    /// Pool size P.
    #[arg(long)]
    pub p: Option<u32>,
    /// Size of the fixed key set to avoid.
    #[arg(long)]
    pub l: Option<u32>,
    /// Number of nodes in the subset.
    #[arg(long)]
    pub r: Option<u32>,
    /// Number of nodes in the graph.
    #[arg(long)]
    pub n: Option<u32>,
    /// Tail point for `P(U_r <= x)`.
    #[arg(long)]
    pub x: Option<u32>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

pub fn cmd_exact(a: &ExactArgs) -> Result<Outcome> {
    let sub = a.kind.name();
    let mut rec = OutputRecord::new(format!("exact {sub}"));
    for (flag, v) in [("k", a.k), ("p", a.p), ("l", a.l), ("r", a.r), ("n", a.n), ("x", a.x)] {
        if let Some(v) = v {
            rec = rec.param(flag, v);
        }
    }
    let k = need(a.k, "k", sub)?;
    let p = need(a.p, "p", sub)?;
    match a.kind {
        ExactKind::Q => {
            let q = q_theta(Theta::new(k, p)?);
            rec.result("rational", q.rational_string());
            rec.result("float", q.float());
            rec.result("log", q.log_value());
        }
        ExactKind::Avoid => {
            let v = ring_avoid_prob(p as u64, need(a.l, "l", sub)? as u64, k as u64)?;
            rec.result("rational", v.rational_string());
            rec.result("float", v.float());
            rec.result("log", v.log_value());
        }
        ExactKind::Bounds => {
            let theta = Theta::new(k, p)?;
            if let Some(l) = a.l {
                let (pu, lu, ku) = (p as u64, l as u64, k as u64);
                let b = ratio_bounds(pu, lu, ku)?;
                let value = ring_avoid_prob(pu, lu, ku)?;
                let exact = (p <= keygraph::combinatorics::EXACT_THRESHOLD)
                    .then(|| ratio_bounds_exact(pu, lu, ku))
                    .transpose()?;
                rec.result(
                    "ring_avoid",
                    json!({
                        "lower": b.lower,
                        "value": value.float(),
                        "upper": b.upper,
                        "exp_upper": b.exp_upper,
                        "lower_rational": exact.as_ref().map(|e| format_rational(&e.0)),
                        "value_rational": value.rational_string(),
                        "upper_rational": exact.as_ref().map(|e| format_rational(&e.1)),
                    }),
                );
            }
            let edge = q_theta(theta).complement();
            let bounds = one_minus_q_bounds(theta).ok();
            rec.result(
                "edge_probability",
                json!({
                    "lower": bounds.map(|b| b.0),
                    "value": edge.float(),
                    "upper": bounds.map(|b| b.1),
                    "value_rational": edge.rational_string(),
                }),
            );
        }
        ExactKind::Ur => {
            let dist = ur_distribution(Theta::new(k, p)?, need(a.r, "r", sub)?)?;
            let pmf: serde_json::Map<String, Value> = dist
                .pmf
                .iter()
                .map(|(u, v)| (u.to_string(), json!({"rational": v.rational_string(), "float": v.float()})))
                .collect();
            rec.result("pmf", pmf);
            rec.result("total_rational", dist.total_rational().map(|t| format_rational(&t)));
            rec.result("total_float", dist.total_float());
        }
        ExactKind::Isolation => {
            let v = isolation_prob(need(a.n, "n", sub)?, need(a.r, "r", sub)?, Theta::new(k, p)?)?;
            rec.result("rational", v.rational_string());
            rec.result("float", v.float());
            rec.result("log", v.log_value());
        }
        ExactKind::Tree => {
            let v = tree_prob(Theta::new(k, p)?, need(a.r, "r", sub)?)?;
            rec.result("rational", v.rational_string());
            rec.result("float", v.float());
            rec.result("log", v.log_value());
        }
        ExactKind::Cayley => {
            let log = cayley_bound(Theta::new(k, p)?, need(a.r, "r", sub)?)?;
            rec.result("log", log);
            rec.result("float", log.exp());
        }
        ExactKind::Tail => {
            let theta = Theta::new(k, p)?;
            let (r, x) = (need(a.r, "r", sub)?, need(a.x, "x", sub)?);
            let bounds = ur_tail_bound(theta, r, x)?;
            let exact = ur_tail_bound_exact(theta, r, x)?;
            let cdf = ur_distribution(theta, r)?.cdf(x);
            rec.result("cdf_rational", cdf.rational_string());
            rec.result("cdf_float", cdf.float());
            rec.result("tight_log", finite_or_null(bounds.tight));
            rec.result("loose_log", finite_or_null(bounds.loose));
            rec.result("tight_float", bounds.tight.exp());
            rec.result("loose_float", bounds.loose.exp());
            rec.result("tight_rational", exact.as_ref().map(|e| format_rational(&e.0)));
            rec.result("loose_rational", exact.as_ref().map(|e| format_rational(&e.1)));
        }
        ExactKind::Threshold => {
            let (r_theta, r_n) = r_threshold(Theta::new(k, p)?, need(a.n, "n", sub)?)?;
            rec.result("r_theta", r_theta);
            rec.result("r_n", r_n);
        }
    }
    emit(&rec.render(a.format)?, None)?;
    Ok(Outcome::Ok)
}

/// JSON has no infinities; `-inf` logs (probability zero) print as `null`.
fn finite_or_null(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub k: u32,
    #[arg(long)]
    pub p: u32,
    #[arg(long, default_value_t = 10_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Comma-separated selectors, e.g. `connected,no-isolated,a:2,tree-path:0+1+2`.
    #[arg(long, default_value = "connected,no-isolated")]
    pub events: String,
    /// Worker threads; defaults to all cores. Results do not depend on it.
    #[arg(long, env = "KEYGRAPH_WORKERS")]
    pub workers: Option<usize>,
    /// Also simulate the Erdős–Rényi graph with edge probability `1 - q`.
    #[arg(long)]
    pub er_matched: bool,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn cmd_simulate(a: &SimulateArgs) -> Result<Outcome> {
    let theta = Theta::new(a.k, a.p)?;
    let events = parse_events(&a.events, a.n)?;
    let seed = Seed(a.seed);
    let spec = ExperimentSpec::new(a.n, theta, a.trials, seed, events).with_workers(a.workers);
    let report = run_trials(&spec)?;

    let mut rec = OutputRecord::new("simulate")
        .param("n", a.n)
        .param("k", a.k)
        .param("p", a.p)
        .param("trials", a.trials)
        .param("seed", a.seed)
        .param("events", &a.events)
        .param("er_matched", a.er_matched);
    for e in &report.estimates {
        rec.result(&e.event, e.estimate);
    }
    if let Some(d) = report.degree {
        rec.result("degree", d);
    }
    if a.er_matched {
        let edge = matched_er_p(theta).float();
        let er = er_simulate(a.n, edge, a.trials, seed.derive(1), a.workers)?;
        rec.result("er_matched", er);
    }
    emit(&rec.render(a.format)?, a.out.as_deref())?;
    Ok(Outcome::Ok)
}

/// Sweep configuration file. Command-line flags override its fields.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub pool: PoolRule,
    #[serde(default)]
    pub n_values: Vec<u64>,
    #[serde(default)]
    pub alpha_values: Vec<f64>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// JSON file with `pool`, `n_values`, `alpha_values`, `trials`, `seed`.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Linear pool rule `P_n = ⌈c n⌉`.
    #[arg(long)]
    pub pool_c: Option<f64>,
    /// Comma-separated node counts.
    #[arg(long, value_delimiter = ',')]
    pub n: Vec<u64>,
    /// Comma-separated deviations.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub alpha: Vec<f64>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, env = "KEYGRAPH_WORKERS")]
    pub workers: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub const SWEEP_HEADER: [&str; 21] = [
    "n",
    "K",
    "P",
    "realized_alpha",
    "p_connected",
    "ci_low",
    "ci_high",
    "p_no_isolated",
    "niso_ci_low",
    "niso_ci_high",
    "er_p_connected",
    "er_ci_low",
    "er_ci_high",
    "requested_alpha",
    "complete_graph",
    "clamped",
    "trials",
    "seed",
    "pool_rule",
    "schema_version",
    "error",
];

fn sweep_record(row: &SweepRow, trials: u64, seed: u64, pool: &str) -> Vec<String> {
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let est = |e: Option<keygraph::montecarlo::EstimateWithCI>| [opt(e.map(|e| e.point)), opt(e.map(|e| e.ci_low)), opt(e.map(|e| e.ci_high))];
    let [c, c_lo, c_hi] = est(row.connected);
    let [ni, ni_lo, ni_hi] = est(row.no_isolated);
    let [er, er_lo, er_hi] = est(row.er_connected);
    vec![
        row.n.to_string(),
        row.k.map(|k| k.to_string()).unwrap_or_default(),
        row.p.map(|p| p.to_string()).unwrap_or_default(),
        opt(row.realized_alpha),
        c,
        c_lo,
        c_hi,
        ni,
        ni_lo,
        ni_hi,
        er,
        er_lo,
        er_hi,
        row.requested_alpha.to_string(),
        row.complete_graph.to_string(),
        row.clamped.to_string(),
        trials.to_string(),
        seed.to_string(),
        pool.to_owned(),
        SCHEMA_VERSION.to_owned(),
        row.error.clone().unwrap_or_default(),
    ]
}

pub fn cmd_sweep(a: &SweepArgs) -> Result<Outcome> {
    let config = match &a.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
            Some(serde_json::from_str::<SweepConfig>(&text).with_context(|| format!("bad sweep config {}", path.display()))?)
        }
        None => None,
    };
    let pool = match (a.pool_c, &config) {
        (Some(c), _) => PoolRule::Linear { c },
        (None, Some(cfg)) => cfg.pool.clone(),
        (None, None) => PoolRule::Linear { c: 2.0 },
    };
    let n_values = if a.n.is_empty() { config.as_ref().map(|c| c.n_values.clone()).unwrap_or_default() } else { a.n.clone() };
    let alpha_values =
        if a.alpha.is_empty() { config.as_ref().map(|c| c.alpha_values.clone()).unwrap_or_default() } else { a.alpha.clone() };
    let trials = a.trials.or(config.as_ref().and_then(|c| c.trials)).unwrap_or(1_000);
    let seed = a.seed.or(config.as_ref().and_then(|c| c.seed)).unwrap_or(0);
    if n_values.is_empty() || alpha_values.is_empty() {
        bail!("sweep needs at least one n and one alpha value (flags --n/--alpha or the config file)");
    }

    let base = keygraph::scaling::Scaling { pool: pool.clone(), ring: keygraph::scaling::RingRule::Alpha { alpha: 0.0 } };
    let rows = sweep(&base, &n_values, &alpha_values, trials, Seed(seed), a.workers)?;
    let pool_text = serde_json::to_string(&pool)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SWEEP_HEADER)?;
    for row in &rows {
        w.write_record(sweep_record(row, trials, seed, &pool_text))?;
    }
    emit(&String::from_utf8(w.into_inner()?)?, a.out.as_deref())?;
    Ok(Outcome::Ok)
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub k: u32,
    #[arg(long)]
    pub p: u32,
    /// Also tabulate the events on every prefix `{0..r-1}`.
    #[arg(long)]
    pub events: bool,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

pub fn cmd_oracle(a: &OracleArgs) -> Result<Outcome> {
    let theta = Theta::new(a.k, a.p)?;
    let bf = if a.events { brute_force_with_events(a.n, theta)? } else { brute_force(a.n, theta)? };
    let mut rec = OutputRecord::new("oracle").param("n", a.n).param("k", a.k).param("p", a.p).param("events", a.events);
    rec.result("assignments", bf.assignments);
    rec.result("p_connected", &bf.p_connected);
    rec.result("p_no_isolated", &bf.p_no_isolated);
    if let Some(prefix) = &bf.prefix {
        rec.result("prefix", prefix);
    }
    emit(&rec.render(a.format)?, None)?;
    Ok(Outcome::Ok)
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    #[arg(long, default_value_t = 1)]
    pub k_min: u32,
    #[arg(long, default_value_t = 6)]
    pub k_max: u32,
    #[arg(long, default_value_t = 1)]
    pub l_min: u32,
    #[arg(long, default_value_t = 6)]
    pub l_max: u32,
    #[arg(long, default_value_t = 2)]
    pub p_min: u32,
    #[arg(long, default_value_t = 40)]
    pub p_max: u32,
    #[arg(long, default_value_t = 1)]
    pub r_min: u32,
    #[arg(long, default_value_t = 6)]
    pub r_max: u32,
    /// Monte Carlo trials per (K, P); 0 skips the simulated checks.
    #[arg(long, default_value_t = 100_000)]
    pub mc_trials: u64,
    /// Graph size for the simulated `A_{n,r}` checks.
    #[arg(long, default_value_t = 12)]
    pub mc_nodes: u32,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, env = "KEYGRAPH_WORKERS")]
    pub workers: Option<usize>,
}

pub fn cmd_audit(a: &AuditArgs) -> Result<Outcome> {
    let grid = AuditGrid {
        k_min: a.k_min,
        k_max: a.k_max,
        l_min: a.l_min,
        l_max: a.l_max,
        p_min: a.p_min,
        p_max: a.p_max,
        r_min: a.r_min,
        r_max: a.r_max,
        mc_trials: a.mc_trials,
        mc_nodes: a.mc_nodes,
        seed: a.seed.map(Seed).unwrap_or(AuditGrid::default().seed),
        workers: a.workers,
    };
    let report = run_audit(&grid)?;
    let mut rec = OutputRecord::new("bounds-audit")
        .param("k_min", grid.k_min)
        .param("k_max", grid.k_max)
        .param("l_min", grid.l_min)
        .param("l_max", grid.l_max)
        .param("p_min", grid.p_min)
        .param("p_max", grid.p_max)
        .param("r_min", grid.r_min)
        .param("r_max", grid.r_max)
        .param("mc_trials", grid.mc_trials)
        .param("mc_nodes", grid.mc_nodes)
        .param("seed", grid.seed.0);
    let checks: BTreeMap<_, _> = report.checks.iter().collect();
    rec.result("checked", report.total_checked());
    rec.result("violation_count", report.total_violations());
    rec.result("tight_count", report.tight.len());
    rec.result("checks", checks);
    rec.result("mc_cells", report.mc_cells);
    rec.result("exact_connectivity_cells", report.exact_connectivity_cells);
    rec.result("violations", &report.violations);
    rec.result("tight", &report.tight);
    emit(&rec.render(Format::Json)?, None)?;
    if report.total_violations() > 0 {
        eprintln!("bounds-audit: {} violated inequalities", report.total_violations());
        return Ok(Outcome::Violations);
    }
    Ok(Outcome::Ok)
}
