//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::process::Command;
use std::time::{Duration, Instant};

use keygraph::analysis::{NodeSet, TreeShape};
use keygraph::audit::{run_audit, AuditGrid};
use keygraph::combinatorics::{isolation_prob, q_theta, ring_avoid_prob, tree_prob, ur_distribution, ExactProb};
use keygraph::montecarlo::{brute_force, run_trials, sweep, Event, ExperimentSpec};
use keygraph::scaling::{equivalence_ratio, k_from_alpha, reduce_scaling, PoolRule, RingRule, Scaling};
use keygraph::{Seed, Theta};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;

type Outcome = Result<String, String>;

fn frac(num: u64, den: u64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn expect_exact(what: &str, got: &ExactProb, want: &BigRational) -> Result<(), String> {
    match got.rational() {
        Some(r) if r == want => Ok(()),
        other => Err(format!("{what}: got {other:?}, enumeration gives {want}")),
    }
}

/// All `K`-subsets of `[0, P)` as bitmasks.
fn ring_masks(k: u32, p: u32) -> Vec<u32> {
    (0u32..1 << p).filter(|m| m.count_ones() == k).collect()
}

/// Calls `f` on every assignment of ring types to `n` nodes.
fn for_each_assignment(types: &[u32], n: usize, mut f: impl FnMut(&[u32])) {
    let mut idx = vec![0usize; n];
    let mut rings = vec![types[0]; n];
    loop {
        f(&rings);
        let mut pos = n;
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < types.len() {
                rings[pos] = types[idx[pos]];
                break;
            }
            idx[pos] = 0;
            rings[pos] = types[0];
        }
    }
}

fn criterion_1() -> Outcome {
    let mut checks = 0u64;
    for p in 1..=8u32 {
        for k in 1..=p {
            let theta = Theta::new(k, p).unwrap();
            let types = ring_masks(k, p);
            let c = types.len() as u64;

            let mut disjoint = 0;
            for_each_assignment(&types, 2, |r| disjoint += (r[0] & r[1] == 0) as u64);
            expect_exact(&format!("q{theta}"), &q_theta(theta), &frac(disjoint, c * c))?;
            checks += 1;

            for l in 0..=p {
                let fixed = (1u32 << l) - 1;
                let avoid = types.iter().filter(|&&m| m & fixed == 0).count() as u64;
                let got = ring_avoid_prob(p as u64, l as u64, k as u64).map_err(|e| e.to_string())?;
                expect_exact(&format!("avoid{theta} l={l}"), &got, &frac(avoid, c))?;
                checks += 1;
            }

            for r in 1..=4usize {
                let total = c.pow(r as u32);
                let (mut path, mut star) = (0u64, 0u64);
                let mut union: BTreeMap<u32, u64> = BTreeMap::new();
                for_each_assignment(&types, r, |rings| {
                    path += (1..r).all(|i| rings[i - 1] & rings[i] != 0) as u64;
                    star += (1..r).all(|i| rings[0] & rings[i] != 0) as u64;
                    *union.entry(rings.iter().fold(0, |a, m| a | m).count_ones()).or_default() += 1;
                });
                let tree = tree_prob(theta, r as u32).map_err(|e| e.to_string())?;
                expect_exact(&format!("tree path{theta} r={r}"), &tree, &frac(path, total))?;
                expect_exact(&format!("tree star{theta} r={r}"), &tree, &frac(star, total))?;
                let dist = ur_distribution(theta, r as u32).map_err(|e| e.to_string())?;
                if dist.pmf.len() != union.len() {
                    return Err(format!("U_r support{theta} r={r}: {:?} vs {:?}", dist.pmf.keys(), union.keys()));
                }
                for (u, count) in union {
                    expect_exact(&format!("U_r{theta} r={r} u={u}"), &dist.pmf(u), &frac(count, total))?;
                }
                checks += 3;
            }

            for n in 2..=4usize {
                let total = c.pow(n as u32);
                for r in 1..n {
                    let mut isolated = 0u64;
                    for_each_assignment(&types, n, |rings| {
                        let inside = rings[..r].iter().fold(0, |a, m| a | m);
                        isolated += rings[r..].iter().all(|m| m & inside == 0) as u64;
                    });
                    let got = isolation_prob(n as u32, r as u32, theta).map_err(|e| e.to_string())?;
                    expect_exact(&format!("isolation{theta} n={n} r={r}"), &got, &frac(isolated, total))?;
                    checks += 1;
                }
            }
        }
    }
    Ok(format!("{checks} exact comparisons, all equal"))
}

fn criterion_2() -> Outcome {
    for n in 2..=6usize {
        for p in 1..=4u32 {
            let bf = brute_force(n, Theta::new(1, p).unwrap()).map_err(|e| e.to_string())?;
            let want = BigRational::new(BigInt::one(), BigInt::from(p).pow(n as u32 - 1));
            expect_exact(&format!("n={n} P={p}"), &bf.p_connected, &want)?;
        }
    }
    Ok("P(connected) = P^-(n-1) for n in 2..=6, P in 1..=4".into())
}

fn criterion_3() -> Outcome {
    let report = run_audit(&AuditGrid::default()).map_err(|e| e.to_string())?;
    if report.total_violations() > 0 {
        return Err(format!("{} violations, first {:?}", report.total_violations(), report.violations[0]));
    }
    Ok(format!(
        "{} inequalities checked, 0 violations ({} tight, {} simulated (K,P) cells, {} enumerated connectivity cells)",
        report.total_checked(),
        report.tight.len(),
        report.mc_cells,
        report.exact_connectivity_cells
    ))
}

fn criterion_4() -> Outcome {
    let theta = Theta::new(2, 10).unwrap();
    let n = 4;
    let mut events = Vec::new();
    for r in 2..=4 {
        let s = NodeSet::prefix(r, n).unwrap();
        events.push(Event::Tree(s.clone(), TreeShape::path(r).unwrap()));
        events.push(Event::Tree(s, TreeShape::star(r).unwrap()));
    }
    let report = run_trials(&ExperimentSpec::new(n, theta, 100_000, Seed(4), events.clone())).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for e in &events {
        let Event::Tree(s, _) = e else { unreachable!() };
        let want = tree_prob(theta, s.len() as u32).unwrap().float();
        let est = report.get(e).unwrap();
        let z = (est.point - want).abs() / est.std_err();
        worst = worst.max(z);
        if z > 3.0 {
            return Err(format!("{}: {} vs {want} ({z:.2} SE)", e.label(), est.point));
        }
    }
    Ok(format!("6 tree frequencies, largest deviation {worst:.2} SE"))
}

fn criterion_5() -> Outcome {
    let theta = Theta::new(2, 20).unwrap();
    let report = run_trials(&ExperimentSpec::new(20, theta, 100_000, Seed(5), vec![Event::DegreeStats]))
        .map_err(|e| e.to_string())?;
    let d = report.degree.unwrap();
    let want = 19.0 * q_theta(theta).complement().float();
    let z = (d.mean - want).abs() / d.std_err;
    if z > 3.0 {
        return Err(format!("mean degree {} vs {want} ({z:.2} SE)", d.mean));
    }
    Ok(format!("mean degree {:.4} vs {want:.4} ({z:.2} SE)", d.mean))
}

fn criterion_6() -> Outcome {
    let base = Scaling { pool: PoolRule::Linear { c: 2.0 }, ring: RingRule::Alpha { alpha: 0.0 } };
    let alphas = [-8.0, -7.5, -7.2, -4.0, 0.0, 4.0, 6.0, 8.0];
    let rows = sweep(&base, &[2000], &alphas, 2000, Seed(6), None).map_err(|e| e.to_string())?;
    let (mut low, mut high, mut infeasible) = (0, 0, 0);
    for row in &rows {
        let Some(alpha) = row.realized_alpha else {
            infeasible += 1;
            continue;
        };
        let c = row.connected.unwrap().point;
        let ni = row.no_isolated.unwrap().point;
        if alpha <= -6.0 {
            low += 1;
            if c > 0.2 {
                return Err(format!("realized alpha {alpha:.2}: P(connected) = {c} > 0.2"));
            }
        }
        if alpha >= 6.0 {
            high += 1;
            if c < 0.8 {
                return Err(format!("realized alpha {alpha:.2}: P(connected) = {c} < 0.8"));
            }
            if (c - ni).abs() > 0.05 {
                return Err(format!("realized alpha {alpha:.2}: |{c} - {ni}| > 0.05"));
            }
        }
    }
    if low == 0 || high == 0 {
        return Err(format!("grid did not reach both regimes ({low} low, {high} high cells)"));
    }
    Ok(format!("{low} cells at alpha <= -6, {high} at alpha >= 6, {infeasible} infeasible cell(s) recorded as errors"))
}

fn criterion_7() -> Outcome {
    let mut parts = Vec::new();
    for n in [1_000u64, 10_000, 100_000] {
        let p = (2 * n) as u32;
        let fit = k_from_alpha(n, p, 5.0).map_err(|e| e.to_string())?;
        let ratio = equivalence_ratio(Theta::new(fit.k, p).unwrap());
        if !(0.9..=1.1).contains(&ratio) {
            return Err(format!("n={n}: ratio {ratio}"));
        }
        parts.push(format!("n={n} K={} ratio={ratio:.4}", fit.k));
    }
    Ok(parts.join(", "))
}

fn criterion_8() -> Outcome {
    let s = Scaling { pool: PoolRule::Linear { c: 2.0 }, ring: RingRule::AlphaPower { coef: 1.0, exponent: 0.9 } };
    let red = reduce_scaling(&s, &[100, 1_000, 10_000]).map_err(|e| e.to_string())?;
    for row in &red.rows {
        if !row.k_reduced_le_k || !row.alpha_star_le_reduced {
            return Err(format!("{row:?}"));
        }
    }
    Ok(red.rows.iter().map(|r| format!("n={} K={}->{}", r.n, r.k, r.k_reduced)).collect::<Vec<_>>().join(", "))
}

fn run_cli(args: &[&str], workers: Option<usize>) -> Result<Vec<u8>, String> {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_keygraph"));
    cmd.args(args).env_remove("KEYGRAPH_WORKERS");
    if let Some(w) = workers {
        cmd.env("KEYGRAPH_WORKERS", w.to_string());
    }
    let out = cmd.output().map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("{args:?} failed: {}", String::from_utf8_lossy(&out.stderr)));
    }
    Ok(out.stdout)
}

fn criterion_9() -> Outcome {
    let max = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let sweep_out = dir.path().join("sweep.csv");
    let sweep_path = sweep_out.to_str().unwrap();
    let commands: Vec<Vec<&str>> = vec![
        "simulate --n 3 --k 1 --p 2 --trials 100000 --seed 7".split(' ').collect(),
        "simulate --n 60 --k 3 --p 250 --trials 20000 --seed 11 --events connected,no-isolated,a:2,degree,tree-star:0+1+2 --er-matched"
            .split(' ')
            .collect(),
        "simulate --n 40 --k 2 --p 100 --trials 5000 --seed 12 --format csv".split(' ').collect(),
        vec!["sweep", "--n", "100,300", "--alpha=-4,0,4", "--trials", "500", "--seed", "13"],
        vec!["sweep", "--n", "200", "--alpha=1,2", "--trials", "300", "--seed", "14", "--out", sweep_path],
    ];
    let mut worker_counts = vec![1, max];
    if max < 4 {
        worker_counts.push(4);
    }
    for args in &commands {
        let reference = read_output(args, Some(1), sweep_path)?;
        for &w in &worker_counts {
            for _ in 0..2 {
                if read_output(args, Some(w), sweep_path)? != reference {
                    return Err(format!("{args:?} differs at {w} workers"));
                }
            }
        }
        if read_output(args, None, sweep_path)? != reference {
            return Err(format!("{args:?} differs with the default worker count"));
        }
    }
    Ok(format!("{} commands byte-identical at workers {:?} and default", commands.len(), worker_counts))
}

fn read_output(args: &[&str], workers: Option<usize>, out_path: &str) -> Result<Vec<u8>, String> {
    let stdout = run_cli(args, workers)?;
    if args.contains(&out_path) {
        let bytes = std::fs::read(out_path).map_err(|e| e.to_string())?;
        std::fs::remove_file(out_path).map_err(|e| e.to_string())?;
        return Ok(bytes);
    }
    Ok(stdout)
}

fn main() {
    let criteria: [(u32, &str, u64, fn() -> Outcome); 9] = [
        (1, "exact formulas match exhaustive enumeration", 60, criterion_1),
        (2, "one-key law", 5, criterion_2),
        (3, "bound audit", 120, criterion_3),
        (4, "tree probability", 30, criterion_4),
        (5, "degree law", 30, criterion_5),
        (6, "zero-one portrait at n = 2000", 600, criterion_6),
        (7, "asymptotic equivalence window", 5, criterion_7),
        (8, "reduction construction", 5, criterion_8),
        (9, "determinism across worker counts", 60, criterion_9),
    ];
    let mut failed = 0;
    for (id, name, limit, check) in criteria {
        let start = Instant::now();
        let outcome = check();
        let took = start.elapsed();
        let over = took > Duration::from_secs(limit);
        let (status, detail) = match (&outcome, over) {
            (Ok(d), false) => ("PASS", d.clone()),
            (Ok(d), true) => ("FAIL", format!("{d}; over the {limit} s budget")),
            (Err(e), _) => ("FAIL", e.clone()),
        };
        if status == "FAIL" {
            failed += 1;
        }
        println!("{status} criterion {id} ({name}) [{:.1} s / {limit} s]: {detail}", took.as_secs_f64());
    }
    println!("acceptance: {} of 9 criteria passed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
