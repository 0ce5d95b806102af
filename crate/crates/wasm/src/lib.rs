//! Browser bindings for the demo page in `www/`.
//!
//! Each exported function returns a JSON string; the page parses it and draws
//! on a canvas. The plain `*_json` functions hold the logic so they can be
//! tested natively.

use keygraph::analysis::summarize;
use keygraph::combinatorics::{ur_distribution, ur_tail_bound};
use keygraph::montecarlo::sweep;
use keygraph::scaling::{PoolRule, RingRule, Scaling};
use keygraph::{KeyGraph, Seed, Theta};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Largest graph the page will draw.
pub const MAX_DRAWN_NODES: usize = 400;
/// Largest `n × trials` product per curve point, to keep the page responsive.
pub const MAX_CURVE_WORK: u64 = 20_000_000;

#[derive(Serialize)]
struct PmfPoint {
    u: u32,
    pmf: f64,
    cdf: f64,
    rational: Option<String>,
    /// `exp` of the tight and loose tail bounds on `P(U_r <= u)`.
    tight_bound: f64,
    loose_bound: f64,
}

#[derive(Serialize)]
struct PmfReport {
    k: u32,
    p: u32,
    r: u32,
    points: Vec<PmfPoint>,
}

pub fn ur_pmf_json(k: u32, p: u32, r: u32) -> Result<String, String> {
    let theta = Theta::new(k, p).map_err(|e| e.to_string())?;
    let dist = ur_distribution(theta, r).map_err(|e| e.to_string())?;
    let mut points = Vec::new();
    for (&u, prob) in &dist.pmf {
        let tail = ur_tail_bound(theta, r, u).map_err(|e| e.to_string())?;
        points.push(PmfPoint {
            u,
            pmf: prob.float(),
            cdf: dist.cdf(u).float(),
            rational: prob.rational_string(),
            tight_bound: tail.tight.exp().min(1.0),
            loose_bound: tail.loose.exp().min(1.0),
        });
    }
    serde_json::to_string(&PmfReport { k, p, r, points }).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct CurvePoint {
    requested_alpha: f64,
    realized_alpha: Option<f64>,
    k: Option<u32>,
    p: Option<u32>,
    connected: Option<f64>,
    connected_low: Option<f64>,
    connected_high: Option<f64>,
    no_isolated: Option<f64>,
    er_connected: Option<f64>,
    error: Option<String>,
}

pub fn connectivity_curve_json(n: u64, pool_c: f64, alphas: &str, trials: u64, seed: u64) -> Result<String, String> {
    if n.saturating_mul(trials) > MAX_CURVE_WORK {
        return Err(format!("n × trials must stay below {MAX_CURVE_WORK} in the browser"));
    }
    let alphas = alphas
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<f64>().map_err(|_| format!("bad alpha value {s:?}")))
        .collect::<Result<Vec<_>, _>>()?;
    let base = Scaling { pool: PoolRule::Linear { c: pool_c }, ring: RingRule::Alpha { alpha: 0.0 } };
    let rows = sweep(&base, &[n], &alphas, trials, Seed(seed), Some(1)).map_err(|e| e.to_string())?;
    let points: Vec<CurvePoint> = rows
        .into_iter()
        .map(|r| CurvePoint {
            requested_alpha: r.requested_alpha,
            realized_alpha: r.realized_alpha,
            k: r.k,
            p: r.p,
            connected: r.connected.map(|e| e.point),
            connected_low: r.connected.map(|e| e.ci_low),
            connected_high: r.connected.map(|e| e.ci_high),
            no_isolated: r.no_isolated.map(|e| e.point),
            er_connected: r.er_connected.map(|e| e.point),
            error: r.error,
        })
        .collect();
    serde_json::to_string(&points).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct GraphReport<'a> {
    n: usize,
    k: u32,
    p: u32,
    rings: Vec<&'a [u32]>,
    edges: Vec<(usize, usize)>,
    components: usize,
    isolated: usize,
    connected: bool,
}

pub fn sample_graph_json(n: usize, k: u32, p: u32, seed: u64) -> Result<String, String> {
    if n > MAX_DRAWN_NODES {
        return Err(format!("the page draws at most {MAX_DRAWN_NODES} nodes"));
    }
    let theta = Theta::new(k, p).map_err(|e| e.to_string())?;
    let g = KeyGraph::build(n, theta, Seed(seed)).map_err(|e| e.to_string())?;
    let s = summarize(&g);
    let report = GraphReport {
        n,
        k,
        p,
        rings: g.rings().iter().map(|r| r.keys()).collect(),
        edges: g.edges(),
        components: s.components,
        isolated: s.isolated,
        connected: s.connected(),
    };
    serde_json::to_string(&report).map_err(|e| e.to_string())
}

/// Distribution of the number of distinct keys held by `r` nodes, with tail bounds.
#[wasm_bindgen]
pub fn ur_pmf(k: u32, p: u32, r: u32) -> Result<String, JsValue> {
    ur_pmf_json(k, p, r).map_err(|e| JsValue::from_str(&e))
}

/// Estimated connectivity for each deviation in the comma-separated `alphas`.
#[wasm_bindgen]
pub fn connectivity_curve(n: u32, pool_c: f64, alphas: &str, trials: u32, seed: u32) -> Result<String, JsValue> {
    connectivity_curve_json(n as u64, pool_c, alphas, trials as u64, seed as u64).map_err(|e| JsValue::from_str(&e))
}

/// One random key graph: rings, edges and its connectivity summary.
#[wasm_bindgen]
pub fn sample_graph(n: u32, k: u32, p: u32, seed: u32) -> Result<String, JsValue> {
    sample_graph_json(n as usize, k, p, seed as u64).map_err(|e| JsValue::from_str(&e))
}
