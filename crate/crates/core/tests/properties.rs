mod common;

use chrono::{Days, NaiveDate};
use ndarray::Array2;
use oricci::diagnostics::autocorrelation;
use oricci::graph::{augment_high_value_edges, build_complete_graph, hop_distances, minimum_spanning_tree, MarketGraph};
use oricci::indicator::{correlation_matrix, distance_from_correlation, window_graph, DistanceTransform, InputMode, WindowConfig};
use oricci::ingestion::{read_price_csv, write_price_csv, PriceMatrix};
use oricci::transport::{wasserstein1, wasserstein1_oracle, NodeMeasure};
use oricci::{average_curvature, extremal_subgraph, AveragingMode, SubsampleConfig, Weighting};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn graph_from_seed(seed: u64, n: usize, p: f64) -> MarketGraph {
    common::random_connected_graph(&mut ChaCha8Rng::seed_from_u64(seed), n, p)
}

/// Symmetric matrix with unit diagonal and off-diagonal entries from `values`.
fn correlation_from(n: usize, values: &[f64]) -> Array2<f64> {
    let mut rho = Array2::from_diag_elem(n, 1.0);
    let mut k = 0;
    for i in 0..n {
        for j in i + 1..n {
            rho[[i, j]] = values[k];
            rho[[j, i]] = values[k];
            k += 1;
        }
    }
    rho
}

fn labels(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("a{i}")).collect()
}

fn correlations(max_n: usize) -> impl Strategy<Value = (usize, Vec<f64>)> {
    (3..=max_n).prop_flat_map(|n| (Just(n), prop::collection::vec(-1.0..=1.0f64, n * (n - 1) / 2)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn solver_matches_exhaustive_oracle(seed in any::<u64>(), n in 2usize..=8, q in 1usize..=12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = common::random_connected_graph(&mut rng, n, 0.4);
        let d = hop_distances(&g);
        let k1 = 1 + (seed as usize) % q.min(n).min(7);
        let k2 = 1 + (seed as usize / 7) % q.min(n).min(8 - k1);
        let mu = common::random_rational_measure(&mut rng, n, k1, q);
        let nu = common::random_rational_measure(&mut rng, n, k2, q);
        let plan = wasserstein1(&mu, &nu, &d).unwrap();
        prop_assert!((plan.cost - wasserstein1_oracle(&mu, &nu, &d).unwrap()).abs() <= 1e-9);
        for (got, want) in plan.row_sums().iter().zip(mu.masses()) {
            prop_assert!((got - want).abs() <= 1e-9);
        }
        for (got, want) in plan.column_sums().iter().zip(nu.masses()) {
            prop_assert!((got - want).abs() <= 1e-9);
        }
    }

    #[test]
    fn solver_matches_dual_on_small_diameter(seed in any::<u64>(), n in 3usize..=7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = common::random_connected_graph(&mut rng, n, 0.6);
        let d = hop_distances(&g);
        prop_assume!(d.diameter() <= 3);
        for (a, b) in [(0, n - 1), (1, 2)] {
            let mu = common::measure_by_hand(&g, a, Weighting::EdgeWeight);
            let nu = common::measure_by_hand(&g, b, Weighting::EdgeWeight);
            let fast = wasserstein1(&mu, &nu, &d).unwrap().cost;
            prop_assert!((fast - common::dual_w1(&mu, &nu, &d)).abs() <= 1e-9);
        }
    }

    #[test]
    fn w1_is_a_metric(seed in any::<u64>(), n in 3usize..=9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = common::random_connected_graph(&mut rng, n, 0.35);
        let d = hop_distances(&g);
        let m: Vec<NodeMeasure> = (0..3).map(|i| common::measure_by_hand(&g, (i * 3) % n, Weighting::EdgeWeight)).collect();
        let w = |a: &NodeMeasure, b: &NodeMeasure| wasserstein1(a, b, &d).unwrap().cost;
        prop_assert!(w(&m[0], &m[0]).abs() <= 1e-12);
        prop_assert!((w(&m[0], &m[1]) - w(&m[1], &m[0])).abs() <= 1e-9);
        prop_assert!(w(&m[0], &m[2]) <= w(&m[0], &m[1]) + w(&m[1], &m[2]) + 1e-9);
    }

    #[test]
    fn mst_matches_spanning_tree_enumeration(w in prop::collection::vec(0.0..4.0f64, 6)) {
        let pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
        let mut g = MarketGraph::with_size(4);
        for (&(a, b), &wt) in pairs.iter().zip(&w) {
            g.add_edge(a, b, wt, None).unwrap();
        }
        let mut best = f64::INFINITY;
        let mut trees = 0;
        for subset in common::subsets(6, 3) {
            let mut t = MarketGraph::with_size(4);
            for &e in &subset {
                t.add_edge(pairs[e].0, pairs[e].1, w[e], None).unwrap();
            }
            if t.is_connected() {
                trees += 1;
                best = best.min(t.total_weight());
            }
        }
        prop_assert_eq!(trees, 16);
        let mst = minimum_spanning_tree(&g).unwrap();
        prop_assert_eq!(mst.edge_count(), 3);
        prop_assert!(mst.is_connected());
        prop_assert!((mst.total_weight() - best).abs() <= 1e-12);
    }

    #[test]
    fn augmentation_is_monotone_in_xi((n, values) in correlations(9), a in -1.0..=1.0f64, b in -1.0..=1.0f64) {
        let rho = correlation_from(n, &values);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let g_lo = window_graph(labels(n), &rho, &WindowConfig::new(22, lo)).unwrap();
        let g_hi = window_graph(labels(n), &rho, &WindowConfig::new(22, hi)).unwrap();
        prop_assert!(g_hi.edge_count() <= g_lo.edge_count());
        for key in g_hi.edge_keys() {
            prop_assert!(g_lo.has_edge(key.0, key.1));
        }
        prop_assert!(g_hi.edge_count() >= n - 1);
    }

    #[test]
    fn monotone_transforms_share_the_tree((n, values) in correlations(9), p in 0.1..5.0f64) {
        let rho = correlation_from(n, &values);
        let trees: Vec<Vec<(usize, usize)>> = [DistanceTransform::SqrtUltrametric, DistanceTransform::Power(p), DistanceTransform::Log1pScaled]
            .into_iter()
            .map(|h| {
                let d = distance_from_correlation(&rho, h).unwrap();
                minimum_spanning_tree(&build_complete_graph(labels(n), &d, &rho).unwrap()).unwrap().edge_keys()
            })
            .collect();
        prop_assert_eq!(&trees[0], &trees[1]);
        prop_assert_eq!(&trees[0], &trees[2]);
    }

    #[test]
    fn hop_distances_are_a_metric_and_shrink_under_additions(seed in any::<u64>(), n in 3usize..=10) {
        let g = graph_from_seed(seed, n, 0.3);
        let d = hop_distances(&g);
        for a in 0..n {
            prop_assert_eq!(d.get(a, a), Some(0));
            for b in 0..n {
                prop_assert_eq!(d.get(a, b), d.get(b, a));
                for c in 0..n {
                    prop_assert!(d.get(a, c).unwrap() <= d.get(a, b).unwrap() + d.get(b, c).unwrap());
                }
            }
        }
        if let Some((x, y)) = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).find(|&(a, b)| !g.has_edge(a, b)) {
            let mut g2 = g.clone();
            g2.add_edge(x, y, 1.0, None).unwrap();
            let d2 = hop_distances(&g2);
            for a in 0..n {
                for b in 0..n {
                    prop_assert!(d2.get(a, b).unwrap() <= d.get(a, b).unwrap());
                }
            }
            prop_assert_eq!(d2.get(x, y), Some(1));
        }
    }

    #[test]
    fn curvature_is_scale_invariant(seed in any::<u64>(), n in 2usize..=8, c in 0.01..100.0f64) {
        let g = graph_from_seed(seed, n, 0.4);
        let scaled = g.scaled_weights(c).unwrap();
        for mode in [AveragingMode::Edges, AveragingMode::Pairs] {
            let a = average_curvature(&g, mode, Weighting::EdgeWeight).unwrap();
            let b = average_curvature(&scaled, mode, Weighting::EdgeWeight).unwrap();
            prop_assert!((a.average - b.average).abs() <= 1e-9);
        }
    }

    #[test]
    fn curvature_stays_in_range(seed in any::<u64>(), n in 2usize..=9) {
        let g = graph_from_seed(seed, n, 0.3);
        let r = average_curvature(&g, AveragingMode::Edges, Weighting::EdgeWeight).unwrap();
        for &k in r.per_pair.values() {
            prop_assert!((-2.0 - 1e-12..=1.0 + 1e-12).contains(&k));
        }
    }

    #[test]
    fn subsample_returns_connected_subsets(seed in any::<u64>(), n in 4usize..=9, m in 2usize..=4) {
        let g = graph_from_seed(seed, n, 0.35);
        let cfg = SubsampleConfig { seed, restarts: 2, ..SubsampleConfig::new(m) };
        let r = extremal_subgraph(&g, &cfg).unwrap();
        prop_assert_eq!(r.nodes.len(), m);
        prop_assert!(common::induces_connected(&g, &r.nodes));
        prop_assert!(r.iterations <= cfg.max_iters);
    }

    #[test]
    fn pearson_matches_textbook_formula(xs in prop::collection::vec((0.5..50.0f64, 0.5..50.0f64), 3..40)) {
        let (x, y): (Vec<f64>, Vec<f64>) = xs.into_iter().unzip();
        let m = price_matrix(&[x.clone(), y.clone()]);
        let c = correlation_matrix(&m.window(0..x.len()), InputMode::RawPrice).unwrap();
        let by_hand = common::pearson_by_hand(&x, &y);
        prop_assume!(by_hand.is_finite());
        prop_assert!((c.rho[[0, 1]] - by_hand).abs() <= 1e-9);
    }

    #[test]
    fn csv_round_trip_is_exact(cells in prop::collection::vec(prop::collection::vec(prop::option::weighted(0.8, 0.01..1e6f64), 3), 1..20)) {
        let n = cells.len();
        let mut rows = cells;
        for col in 0..3 {
            if rows.iter().all(|r| r[col].is_none()) {
                rows[0][col] = Some(1.0);
            }
        }
        let start = NaiveDate::from_ymd_opt(2001, 2, 3).unwrap();
        let dates = (0..n).map(|i| start + Days::new(i as u64)).collect();
        let m = PriceMatrix::new(dates, vec!["AA".into(), "BB".into(), "CC".into()], rows).unwrap();
        let mut buf = Vec::new();
        write_price_csv(&m, &mut buf).unwrap();
        prop_assert_eq!(read_price_csv(buf.as_slice()).unwrap(), m);
    }

    #[test]
    fn acf_is_bounded(xs in prop::collection::vec(prop::option::weighted(0.9, -10.0..10.0f64), 12..80)) {
        prop_assume!(xs.iter().flatten().count() > 10);
        if let Ok(r) = autocorrelation(&xs, 8) {
            prop_assert_eq!(r.acf[0], 1.0);
            prop_assert!(r.acf.iter().all(|a| (-1.0..=1.0).contains(a)));
        }
    }
}

fn price_matrix(cols: &[Vec<f64>]) -> PriceMatrix {
    let n = cols[0].len();
    let start = NaiveDate::from_ymd_opt(2010, 1, 1).unwrap();
    let dates = (0..n).map(|i| start + Days::new(i as u64)).collect();
    let rows = (0..n).map(|r| cols.iter().map(|c| Some(c[r])).collect()).collect();
    PriceMatrix::new(dates, (0..cols.len()).map(|i| format!("T{i}")).collect(), rows).unwrap()
}

#[test]
fn augmented_graph_contains_the_tree() {
    let rho = correlation_from(4, &[0.9, 0.88, 0.3, 0.86, 0.1, 0.95]);
    let d = distance_from_correlation(&rho, DistanceTransform::SqrtUltrametric).unwrap();
    let complete = build_complete_graph(labels(4), &d, &rho).unwrap();
    let tree = minimum_spanning_tree(&complete).unwrap();
    let g = augment_high_value_edges(&tree, &complete, 0.85).unwrap();
    for key in tree.edge_keys() {
        assert!(g.has_edge(key.0, key.1));
    }
    assert_eq!(g.edge_count(), 4);
}
