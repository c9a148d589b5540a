use fiid::graph::*;
use fiid::profiles::all_pairings;
use fiid::rng::LabelScheme;
use fiid::special::poisson_pmf;
use proptest::prelude::*;
use std::collections::HashMap;

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[test]
fn pairings_are_uniform() {
    // n = 4, d = 2: 105 pairings, each should appear 1e6 / 105 times
    let all = all_pairings(4, 2).unwrap();
    assert_eq!(all.len(), 105);
    let index: HashMap<Vec<(u32, u32)>, usize> =
        all.into_iter().enumerate().map(|(i, p)| (p, i)).collect();
    let samples = 1_000_000u64;
    let mut counts = vec![0u64; index.len()];
    for seed in 0..samples {
        counts[index[&sample_pairing(4, 2, seed).unwrap()]] += 1;
    }
    let expected = samples as f64 / counts.len() as f64;
    let chi2: f64 = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    // upper 1e-4 quantile of chi-square with 104 degrees of freedom
    assert!(chi2 < 166.0, "chi-square {chi2}");
}

#[test]
fn loop_count_matches_exact_mean() {
    let (n, d) = (100usize, 3usize);
    let loops: Vec<f64> = (0..4000)
        .map(|s| {
            let g = sample_config_model(n, d, s).unwrap();
            g.edges().iter().filter(|e| e[0] == e[1]).count() as f64
        })
        .collect();
    let exact = n as f64 * (d * (d - 1) / 2) as f64 / (n * d - 1) as f64;
    let (mean, se) = mean_and_se(&loops);
    assert!((mean - exact).abs() < 4.0 * se, "{mean} vs {exact}");
}

#[test]
fn er_edge_count_is_binomial() {
    let (n, lambda) = (300usize, 3.0);
    let trials = 2000;
    let pairs = (n * (n - 1) / 2) as f64;
    let p = lambda / n as f64;
    let counts: Vec<f64> = (0..trials)
        .map(|s| sample_er(n, lambda, s).unwrap().edge_count() as f64)
        .collect();
    let (mean, _) = mean_and_se(&counts);
    let se = (pairs * p * (1.0 - p) / trials as f64).sqrt();
    assert!((mean - pairs * p).abs() < 4.0 * se, "{mean} vs {}", pairs * p);
}

#[test]
fn er_degrees_approach_poisson() {
    let (n, lambda) = (2000usize, 2.0);
    let mut hist = [0u64; 8];
    let mut total = 0u64;
    for s in 0..20 {
        let g = sample_er(n, lambda, s).unwrap();
        for v in 0..n {
            hist[g.degree(v).min(7)] += 1;
            total += 1;
        }
    }
    for (j, &h) in hist.iter().enumerate().take(7) {
        let freq = h as f64 / total as f64;
        let target = poisson_pmf(lambda, j as u64);
        assert!((freq - target).abs() < 0.01, "degree {j}: {freq} vs {target}");
    }
}

#[test]
fn pgw_offspring_is_poisson() {
    let lambda = 2.5;
    let trials = 200_000u64;
    let mut hist = [0u64; 9];
    for s in 0..trials {
        let t = LazyTree::new(Offspring::Poisson { lambda }, s);
        hist[t.offspring(t.root()).min(8)] += 1;
    }
    let mut chi2 = 0.0;
    for (j, &h) in hist.iter().enumerate() {
        let p = if j < 8 {
            poisson_pmf(lambda, j as u64)
        } else {
            1.0 - (0..8).map(|i| poisson_pmf(lambda, i)).sum::<f64>()
        };
        let e = p * trials as f64;
        chi2 += (h as f64 - e).powi(2) / e;
    }
    // 8 degrees of freedom, upper 1e-4 quantile
    assert!(chi2 < 31.8, "chi-square {chi2}");
}

#[test]
fn config_balls_are_mostly_trees() {
    let (n, d, r) = (5000, 3, 3);
    let g = sample_config_model(n, d, 42).unwrap();
    let bad = count_non_tree_vertices(&g, r - 1);
    assert!((bad as f64) / (n as f64) < 0.05, "{bad} non-tree balls");
    let labels = LabelScheme::iid(1);
    for v in (0..n).step_by(97) {
        if is_tree_ball(&g, v, r) {
            // 1 + 3 + 6 + 12 vertices in a 3-regular tree ball of radius 3
            assert_eq!(neighborhood(&g, v, r, &labels).vertex_count(), 22);
        }
    }
}

#[test]
fn non_tree_fraction_shrinks_with_n() {
    let frac = |n: usize| {
        (0..5)
            .map(|s| count_non_tree_vertices(&sample_config_model(n, 3, s).unwrap(), 2))
            .sum::<usize>() as f64
            / (5 * n) as f64
    };
    assert!(frac(4000) < frac(200));
}

#[test]
fn er_ball_sizes_match_poisson_mean() {
    let (n, lambda) = (4000usize, 3.0);
    let g = sample_er(n, lambda, 7).unwrap();
    let labels = LabelScheme::iid(0);
    let sizes: Vec<f64> = (0..n)
        .map(|v| neighborhood(&g, v, 1, &labels).vertex_count() as f64)
        .collect();
    let (mean, _) = mean_and_se(&sizes);
    assert!((mean - (1.0 + lambda)).abs() < 0.1, "{mean}");
}

#[test]
fn samplers_are_deterministic() {
    assert_eq!(sample_config_model(40, 3, 9).unwrap(), sample_config_model(40, 3, 9).unwrap());
    assert_ne!(sample_config_model(40, 3, 9).unwrap(), sample_config_model(40, 3, 10).unwrap());
    assert_eq!(sample_er(40, 2.0, 9).unwrap(), sample_er(40, 2.0, 9).unwrap());
}

#[test]
fn resampled_subset_has_binomial_edges() {
    let (n, lambda) = (400usize, 4.0);
    let subset: Vec<bool> = (0..n).map(|v| v < 100).collect();
    let g = sample_er(n, lambda, 3).unwrap();
    let inside: Vec<f64> = (0..400)
        .map(|s| {
            let h = er_resample(&g, &subset, lambda, s).unwrap();
            h.violating_edges(&subset) as f64
        })
        .collect();
    let (mean, se) = mean_and_se(&inside);
    let exact = (100 * 99 / 2) as f64 * lambda / n as f64;
    assert!((mean - exact).abs() < 4.0 * se, "{mean} vs {exact}");
}

#[test]
fn regular_tree_ball_counts() {
    for d in 2..6 {
        for r in 0..4 {
            let t = sample_regular_tree(d, r, 1);
            let expect: usize = 1 + (1..=r).map(|i| d * (d - 1).pow(i as u32 - 1)).sum::<usize>();
            assert_eq!(t.vertex_count(), expect);
            assert!(t.to_neighborhood().is_tree());
        }
    }
}

proptest! {
    #[test]
    fn graph_json_round_trip(n in 1usize..30, raw in prop::collection::vec((0u32..30, 0u32..30), 0..60)) {
        let edges = raw.into_iter().map(|(a, b)| [a % n as u32, b % n as u32]).collect();
        let g = MultiGraph::from_edges(n, edges, Model::Explicit).unwrap();
        prop_assert_eq!(MultiGraph::from_json(&g.to_json()).unwrap(), g);
    }

    #[test]
    fn config_degrees_always_d(n in 1usize..60, d in 1usize..6, seed in any::<u64>()) {
        prop_assume!(n * d % 2 == 0);
        let g = sample_config_model(n, d, seed).unwrap();
        prop_assert!((0..n).all(|v| g.degree(v) == d));
    }

    #[test]
    fn neighborhood_json_round_trip(seed in any::<u64>(), v in 0usize..50, r in 0usize..4) {
        let g = sample_config_model(50, 3, seed).unwrap();
        let nb = neighborhood(&g, v, r, &LabelScheme::iid(seed));
        prop_assert_eq!(RootedNeighborhood::from_json(&nb.to_json()).unwrap(), nb);
    }
}
