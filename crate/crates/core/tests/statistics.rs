use keygraph::analysis::{NodeSet, TreeShape};
use std::collections::BTreeMap;

use keygraph::combinatorics::{
    cayley_bound, decomposition_bound, isolation_prob, q_theta, tree_prob, union_bound_rhs, ur_distribution,
};
use keygraph::montecarlo::{er_simulate, run_trials, union_bound_check, Event, ExperimentSpec};
use keygraph::scaling::matched_er_p;
use keygraph::{Seed, Theta};

const TRIALS: u64 = 100_000;

fn theta(k: u32, p: u32) -> Theta {
    Theta::new(k, p).unwrap()
}

#[test]
fn tree_frequencies() {
    let t = theta(2, 10);
    let mut events = Vec::new();
    for r in 2..=4 {
        let s = NodeSet::prefix(r, 8).unwrap();
        events.push(Event::Tree(s.clone(), TreeShape::path(r).unwrap()));
        events.push(Event::Tree(s, TreeShape::star(r).unwrap()));
    }
    let report = run_trials(&ExperimentSpec::new(8, t, TRIALS, Seed(21), events.clone())).unwrap();
    for e in &events {
        let Event::Tree(s, _) = e else { unreachable!() };
        let expected = tree_prob(t, s.len() as u32).unwrap().float();
        let est = report.get(e).unwrap();
        assert!(est.within_se(expected, 3.0), "{}: {est:?} vs {expected}", e.label());
    }
}

#[test]
fn degree_law() {
    let t = theta(2, 20);
    let d = run_trials(&ExperimentSpec::new(20, t, TRIALS, Seed(22), vec![Event::DegreeStats]))
        .unwrap()
        .degree
        .unwrap();
    let expected = 19.0 * q_theta(t).complement().float();
    assert!((d.mean - expected).abs() <= 3.0 * d.std_err, "{d:?} vs {expected}");
}

#[test]
fn isolation_frequencies() {
    for (n, r, t) in [(10usize, 2u32, theta(2, 10)), (12, 3, theta(3, 40)), (6, 1, theta(1, 4))] {
        let s = NodeSet::prefix(r as usize, n).unwrap();
        let e = Event::SubsetIsolated(s);
        let report = run_trials(&ExperimentSpec::new(n, t, TRIALS, Seed(230 + n as u64), vec![e.clone()])).unwrap();
        let expected = isolation_prob(n as u32, r, t).unwrap().float();
        let est = report.get(&e).unwrap();
        assert!(est.within_se(expected, 3.0), "n={n} r={r}: {est:?} vs {expected}");
    }
}

#[test]
fn cayley_bound_dominates_subset_connectivity() {
    let t = theta(2, 10);
    let events: Vec<Event> = (2..=5).map(|r| Event::SubsetConnected(NodeSet::prefix(r, 5).unwrap())).collect();
    let report = run_trials(&ExperimentSpec::new(5, t, TRIALS, Seed(24), events.clone())).unwrap();
    for (r, e) in (2..=5u32).zip(&events) {
        let est = report.get(e).unwrap();
        let bound = cayley_bound(t, r).unwrap().exp();
        assert!(est.point - 3.0 * est.std_err() <= bound, "r={r}: {est:?} vs {bound}");
    }
}

#[test]
fn decomposition_bound_dominates_a_event() {
    let (n, r, x) = (10usize, 2u32, 3u32);
    let t = theta(2, 10);
    let c = Event::SubsetConnected(NodeSet::prefix(r as usize, n).unwrap());
    let a = Event::AEvent(r as usize);
    let report = run_trials(&ExperimentSpec::new(n, t, TRIALS, Seed(25), vec![c.clone(), a.clone()])).unwrap();
    let cr_upper = report.get(&c).unwrap().ci_high;
    let tail = ur_distribution(t, r).unwrap().cdf(x).float();
    let bound = decomposition_bound(n as u32, r, t, x, tail, cr_upper).unwrap();
    let est = report.get(&a).unwrap();
    assert!(est.point - 3.0 * est.std_err() <= bound, "{est:?} vs {bound}");
}

#[test]
fn analytic_union_bound_covers_simulation() {
    let (n, t) = (10u32, theta(2, 10));
    let mut prob_a = BTreeMap::new();
    for r in 2..=n / 2 {
        let dist = ur_distribution(t, r).unwrap();
        let cr = cayley_bound(t, r).unwrap().exp().min(1.0);
        let best = (t.k()..=(r * t.k()).min(t.p()))
            .map(|x| decomposition_bound(n, r, t, x, dist.cdf(x).float(), cr).unwrap())
            .fold(f64::INFINITY, f64::min);
        prob_a.insert(r, best.min(1.0));
    }
    let rhs = union_bound_rhs(n, &prob_a).unwrap();
    assert!(rhs.is_finite() && rhs > 0.0);
    let sim = union_bound_check(n as usize, t, TRIALS, Seed(25), None).unwrap();
    assert!(sim.lhs.point - 3.0 * sim.lhs.std_err() <= rhs, "{} > {rhs}", sim.lhs.point);
}

#[test]
fn matched_er_gap_is_reported() {
    // K² P / n near ln n: both models sit inside the transition
    let t = theta(2, 1000);
    let trials = 2_000;
    let kg = run_trials(&ExperimentSpec::new(500, t, trials, Seed(26), vec![Event::Connected])).unwrap();
    let er = er_simulate(500, matched_er_p(t).float(), trials, Seed(26).derive(1), None).unwrap();
    let gap = (kg.estimates[0].estimate.point - er.connected.point).abs();
    assert!((0.0..=1.0).contains(&gap));
}

#[test]
fn identical_seeds_give_identical_reports() {
    let t = theta(3, 60);
    let events = vec![Event::Connected, Event::NoIsolated, Event::AEvent(3), Event::DegreeStats];
    let spec = ExperimentSpec::new(40, t, 5_000, Seed(27), events);
    let a = run_trials(&spec.clone().with_workers(Some(1))).unwrap();
    let b = run_trials(&spec.clone().with_workers(Some(7))).unwrap();
    let c = run_trials(&spec).unwrap();
    assert_eq!(a, b);
    assert_eq!(a, c);
}
