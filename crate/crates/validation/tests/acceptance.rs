//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::time::{Duration, Instant};

use oricci::bounds::{run_kn_family, run_random_suite, BoundName, SuiteConfig};
use oricci::diagnostics::{t_sweep, xi_sweep};
use oricci::graph::{hop_distances, MarketGraph};
use oricci::indicator::{window_graph_at, window_rows, WindowConfig};
use oricci::synthetic::{white_noise, RegimeSwitch};
use oricci::transport::{wasserstein1, wasserstein1_oracle};
use oricci::{
    average_curvature, edge_curvature, extremal_subgraph, indicator_series, AveragingMode, Objective, SubsampleConfig,
    Weighting,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const EXACT: f64 = 1e-12;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn within_time(limit: Duration, elapsed: Duration) -> (bool, String) {
    (elapsed < limit, format!("{:.2}s of {:.0}s", elapsed.as_secs_f64(), limit.as_secs_f64()))
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for n in 3..=8 {
        let g = MarketGraph::complete(n, 1.0);
        let expected = (n as f64 - 2.0) / (n as f64 - 1.0);
        for mode in [AveragingMode::Edges, AveragingMode::Pairs] {
            let r = average_curvature(&g, mode, Weighting::EdgeWeight).unwrap();
            worst = worst.max((r.average - expected).abs());
        }
    }
    let (fast, time) = within_time(Duration::from_secs(1), start.elapsed());
    outcome(worst <= EXACT && fast, format!("max error {worst:.1e}, {time}"))
}

fn criterion_2() -> Outcome {
    let mut worst = 0.0f64;
    for n in 3..=8 {
        let g = MarketGraph::star(n);
        let pairs = average_curvature(&g, AveragingMode::Pairs, Weighting::EdgeWeight).unwrap().average;
        let edges = average_curvature(&g, AveragingMode::Edges, Weighting::EdgeWeight).unwrap().average;
        worst = worst.max((pairs - (n as f64 - 2.0) / n as f64).abs()).max(edges.abs());
    }
    outcome(worst <= EXACT, format!("max error {worst:.1e}"))
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let w = [rng.random_range(1e-3..10.0), rng.random_range(1e-3..10.0)];
        let g = MarketGraph::path(&w).unwrap();
        let pairs = average_curvature(&g, AveragingMode::Pairs, Weighting::EdgeWeight).unwrap().average;
        let edges = average_curvature(&g, AveragingMode::Edges, Weighting::EdgeWeight).unwrap().average;
        worst = worst.max((pairs - 1.0 / 3.0).abs()).max(edges.abs());
    }
    outcome(worst <= EXACT, format!("100 weightings, max error {worst:.1e}"))
}

fn criterion_4() -> Outcome {
    let mut worst = 0.0f64;
    for n in 4..=8 {
        let nf = n as f64;
        let mut g = MarketGraph::with_size(n);
        for a in 0..n {
            for b in a + 1..n {
                if (a, b) != (0, 1) {
                    g.add_edge(a, b, 1.0, None).unwrap();
                }
            }
        }
        let d = hop_distances(&g);
        for a in 0..n {
            for b in a + 1..n {
                let k = edge_curvature(&g, &d, a, b, Weighting::EdgeWeight).unwrap();
                let expected = match (a, b) {
                    (0, 1) => 1.0,
                    (0 | 1, _) => (nf - 3.0) / (nf - 1.0),
                    _ => (nf - 2.0) / (nf - 1.0),
                };
                worst = worst.max((k - expected).abs());
            }
        }
        for mode in [AveragingMode::Edges, AveragingMode::Pairs] {
            let got = average_curvature(&g, mode, Weighting::EdgeWeight).unwrap().average;
            worst = worst.max((got - common::oracle_average(&g, mode, Weighting::EdgeWeight)).abs());
        }
    }
    outcome(worst <= EXACT, format!("per-pair and aggregate max error {worst:.1e}"))
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for _ in 0..500 {
        let n = rng.random_range(2..=9);
        let p = rng.random_range(0.2..0.8);
        let g = common::random_connected_graph(&mut rng, n, p);
        let d = hop_distances(&g);
        let q = rng.random_range(1..=12);
        let k1 = rng.random_range(1..=q.min(n).min(7));
        let k2 = rng.random_range(1..=q.min(n).min(8 - k1));
        let mu = common::random_rational_measure(&mut rng, n, k1, q);
        let nu = common::random_rational_measure(&mut rng, n, k2, q);
        let fast = wasserstein1(&mu, &nu, &d).unwrap().cost;
        let exact = wasserstein1_oracle(&mu, &nu, &d).unwrap();
        worst = worst.max((fast - exact).abs());
    }
    outcome(worst <= 1e-9, format!("500 instances, max cost difference {worst:.1e}"))
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let suite = run_random_suite(SuiteConfig { trials: 1000, seed: 6, ..SuiteConfig::default() }).unwrap();
    let family = run_kn_family(4..=10, Weighting::EdgeWeight).unwrap();
    let (fast, time) = within_time(Duration::from_secs(60), start.elapsed());

    let mut parts = Vec::new();
    let mut pass = suite.distance_order_failures.is_empty();
    for name in [BoundName::Prop1First, BoundName::Prop1Sup, BoundName::LemmaNode, BoundName::Prop2First, BoundName::Prop2Sup] {
        let s = suite.summary(name).unwrap();
        pass &= s.violations == 0;
        parts.push(format!(
            "{} {}/{} violated (min slack {:.3e}, seed {:?})",
            name.as_str(),
            s.violations,
            s.checks,
            s.min_slack,
            s.min_slack_seed
        ));
    }
    for name in [BoundName::Prop1First, BoundName::Prop1Sup] {
        let checks = family.summary(name).unwrap().checks;
        let worst = max_abs(&family_reports(name));
        let sharp = checks > 0 && worst <= 1e-9;
        pass &= sharp;
        parts.push(format!("K_n family {} max |slack| {worst:.3e} over {checks} pairs", name.as_str()));
    }
    outcome(pass && fast, format!("{}; {time}", parts.join("; ")))
}

fn family_reports(name: BoundName) -> Vec<f64> {
    (4..=10)
        .flat_map(|n| oricci::bounds::kn_minus_edge_reports(n, Weighting::EdgeWeight).unwrap())
        .filter(|r| r.bound_name == name)
        .map(|r| r.slack)
        .collect()
}

fn max_abs(slacks: &[f64]) -> f64 {
    slacks.iter().fold(0.0f64, |m, s| m.max(s.abs()))
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let scenario = RegimeSwitch::default();
    let prices = scenario.generate().unwrap();
    let config = WindowConfig::new(132, 0.85);
    let series = indicator_series(&prices, &config).unwrap();
    let (mut calm, mut crisis) = (Vec::new(), Vec::new());
    for (i, end) in (config.window..prices.n_dates()).enumerate() {
        let rows = window_rows(end, config.window, config.input_mode);
        let Some(v) = series.values[i] else { continue };
        if scenario.calm_rows(&rows) {
            calm.push(v);
        } else if scenario.crisis_rows(&rows) {
            crisis.push(v);
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let gap = mean(&crisis) - mean(&calm);
    let (fast, time) = within_time(Duration::from_secs(300), start.elapsed());
    outcome(
        gap >= 0.1 && fast,
        format!(
            "calm mean {:.4} over {} windows, crisis mean {:.4} over {} windows, difference {gap:.4}; {time}",
            mean(&calm),
            calm.len(),
            mean(&crisis),
            crisis.len()
        ),
    )
}

fn criterion_8() -> Outcome {
    let grid = [0.75, 0.8, 0.85, 0.9];
    let prices = RegimeSwitch::default().generate().unwrap();
    let base = WindowConfig::new(132, 0.85);
    let mut edge_failures = 0;
    let mut windows = 0;
    for end in base.window..prices.n_dates() {
        let counts: Vec<usize> = grid
            .iter()
            .map(|&xi| window_graph_at(&prices, end, &WindowConfig { xi, ..base }).unwrap().0.edge_count())
            .collect();
        windows += 1;
        edge_failures += usize::from(counts.windows(2).any(|c| c[1] > c[0]));
    }
    let sweep = xi_sweep(&prices, &base, &grid).unwrap();
    let means: Vec<f64> = sweep.series.iter().map(|s| s.mean().unwrap()).collect();
    let monotone = means.windows(2).all(|m| m[1] <= m[0]);
    outcome(
        edge_failures == 0 && monotone,
        format!("{edge_failures}/{windows} windows with edge count increasing in xi; series means {means:.4?}"),
    )
}

fn criterion_9() -> Outcome {
    let prices = white_noise(20, 1600, 7).unwrap();
    let sweep = t_sweep(&prices, &WindowConfig::new(5, 0.85), &[5, 500]).unwrap();
    let short = sweep.acf[0].as_ref().unwrap();
    let long = sweep.acf[1].as_ref().unwrap();
    let outside = short.fraction_outside(40);
    outcome(
        outside <= 0.1 && long.acf[1] > short.acf[1],
        format!(
            "T=5: {:.1}% of lags 1..40 outside +-{:.4}; lag-1 ACF {:.4} at T=5 vs {:.4} at T=500",
            100.0 * outside,
            short.band,
            short.acf[1],
            long.acf[1]
        ),
    )
}

fn criterion_10() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let (mut trials, mut hits, mut below) = (0, 0, 0);
    for m in [3, 4] {
        for _ in 0..50 {
            let n = rng.random_range(m + 1..=8);
            let p = rng.random_range(0.3..0.7);
            let g = common::random_connected_graph(&mut rng, n, p);
            let optimum = common::subsets(n, m)
                .into_iter()
                .filter(|s| common::induces_connected(&g, s))
                .map(|s| {
                    let sub = oricci::induced_subgraph(&g, &s).unwrap();
                    average_curvature(&sub, AveragingMode::Edges, Weighting::EdgeWeight).unwrap().average
                })
                .fold(f64::INFINITY, f64::min);
            let config = SubsampleConfig { restarts: 20, seed: rng.random(), objective: Objective::Minimize, ..SubsampleConfig::new(m) };
            let found = extremal_subgraph(&g, &config).unwrap().report.average;
            trials += 1;
            hits += usize::from((found - optimum).abs() <= 1e-9);
            below += usize::from(found < optimum - 1e-9);
        }
    }
    let rate = hits as f64 / trials as f64;
    outcome(rate >= 0.9 && below == 0, format!("optimum found in {hits}/{trials} trials, {below} below the optimum"))
}

fn criterion_11() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    let mut example = String::new();
    for _ in 0..100 {
        let n = rng.random_range(2..=8);
        let tree = common::random_tree(&mut rng, n);
        let reference = average_curvature(&tree, AveragingMode::Edges, Weighting::EdgeWeight).unwrap().average;
        for _ in 0..100 {
            let mut weighted = MarketGraph::with_size(n);
            for ((a, b), _) in tree.edges() {
                weighted.add_edge(a, b, rng.random_range(0.01..10.0), None).unwrap();
            }
            let v = average_curvature(&weighted, AveragingMode::Edges, Weighting::EdgeWeight).unwrap().average;
            if (v - reference).abs() > worst {
                worst = (v - reference).abs();
                example = format!("n={n}, edges {:?}: {v:.4} vs {reference:.4} with unit weights", weighted.edge_keys());
            }
        }
    }
    outcome(worst <= 1e-9, format!("max deviation {worst:.3e}; worst case {example}"))
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 11] = [
        ("complete graph golden value", criterion_1),
        ("star golden values", criterion_2),
        ("three-path weight independence", criterion_3),
        ("K_n minus an edge", criterion_4),
        ("transport solver vs exhaustive oracle", criterion_5),
        ("perturbation bounds suite", criterion_6),
        ("synthetic crisis reproduction", criterion_7),
        ("xi monotonicity", criterion_8),
        ("white-noise limit", criterion_9),
        ("sub-sampling oracle", criterion_10),
        ("tree weight independence", criterion_11),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        failed += usize::from(!o.pass);
        println!("criterion {:>2} {}: {} ({})", i + 1, if o.pass { "PASS" } else { "FAIL" }, name, o.detail);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
