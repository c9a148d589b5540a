use fiid::graph::{config_graph_from_pairing, sample_er};
use fiid::profiles::*;
use fiid::{DensityProfileExact, Error, PartitionMeasureExact};
use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{One, ToPrimitive, Zero};
use proptest::prelude::*;

const TOL: f64 = 1e-10;

fn measure(k: usize, raw: &[f64]) -> PartitionMeasure<f64> {
    let total: f64 = raw.iter().sum::<f64>().max(1e-300);
    PartitionMeasure::new(k, raw.iter().map(|x| x / total).collect()).unwrap()
}

fn lattice() -> impl Strategy<Value = (usize, Vec<f64>)> {
    (1usize..=6).prop_flat_map(|k| (Just(k), prop::collection::vec(0.001f64..1.0, 1 << k)))
}

fn big(a: i64, b: i64) -> BigRational {
    BigRational::new(BigInt::from(a), BigInt::from(b))
}

/// `(1 - (1 - x)^k) / x` in exact arithmetic.
fn s_k_exact(x: &BigRational, k: usize) -> BigRational {
    if x.is_zero() {
        return BigRational::from_integer(BigInt::from(k));
    }
    let q = BigRational::one() - x;
    let mut pow = BigRational::one();
    for _ in 0..k {
        pow = &pow * &q;
    }
    (BigRational::one() - pow) / x
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn mobius_round_trip((k, raw) in lattice()) {
        let pi = measure(k, &raw);
        let rho = pi_to_rho(&pi);
        let back = rho_to_pi(&rho).unwrap();
        for (a, b) in pi.pi().iter().zip(back.pi()) {
            prop_assert!((a - b).abs() < TOL);
        }
        prop_assert!((rho.get(0) - 1.0).abs() < TOL);
        // rho(T) is the mass of cells containing T
        for t in 0..1usize << k {
            let direct: f64 = (0..1usize << k).filter(|u| u & t == t).map(|u| pi.pi()[u]).sum();
            prop_assert!((rho.get(t) - direct).abs() < TOL);
        }
    }

    #[test]
    fn weights_are_masses_of_disjoint_cells((k, raw) in lattice()) {
        let pi = measure(k, &raw);
        let w = pi.weights();
        for t in 0..1usize << k {
            let direct: f64 = (0..1usize << k).filter(|u| u & t == 0).map(|u| pi.pi()[u]).sum();
            prop_assert!((w[t] - direct).abs() < TOL);
        }
    }

    #[test]
    fn s_k_forms_agree(x in 0.0f64..=1.0, k in 1usize..=6) {
        let closed = if x == 0.0 { k as f64 } else { (1.0 - (1.0 - x).powi(k as i32)) / x };
        prop_assert!((s_k(x, k) - closed).abs() < TOL);
        prop_assert!((s_k_alternating(x, k) - closed).abs() < TOL);
    }

    #[test]
    fn binom_sum_is_beta_quadratic(alpha in prop::collection::vec(0.0f64..2.0, 1..=6)) {
        let lhs = binom_sum(&alpha);
        let rhs = beta_quadratic(&alpha_to_beta(&alpha));
        prop_assert!((lhs - rhs).abs() < TOL * (1.0 + lhs.abs()), "{lhs} vs {rhs}");
    }

    #[test]
    fn symmetric_transforms_invert(alpha in prop::collection::vec(-1.0f64..1.0, 1..=6)) {
        let back = beta_to_alpha(&alpha_to_beta(&alpha));
        for (a, b) in alpha.iter().zip(&back) {
            prop_assert!((a - b).abs() < TOL);
        }
    }

    #[test]
    fn symmetric_beta_matches_lattice_mobius(alpha in prop::collection::vec(0.0f64..0.1, 1..=6)) {
        // alpha non-increasing keeps the measure non-negative
        let mut alpha = alpha;
        alpha.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let k = alpha.len();
        let beta = alpha_to_beta(&alpha);
        let rho = DensityProfile::symmetric(&alpha).unwrap();
        if let Ok(pi) = rho_to_pi(&rho) {
            for t in 1..1usize << k {
                prop_assert!((pi.pi()[t] - beta[t.count_ones() as usize - 1]).abs() < TOL);
            }
        }
    }

    #[test]
    fn pair_counts_agree(k in 1usize..=6, n in 0usize..40, bits in prop::collection::vec(any::<u64>(), 40)) {
        let sets: Vec<Vec<bool>> = (0..k)
            .map(|i| (0..n).map(|v| bits[v] >> i & 1 == 1).collect())
            .collect();
        let counts = cell_counts(&sets).unwrap();
        prop_assert_eq!(intersecting_pairs_direct(&sets).unwrap(), intersecting_pairs_from_counts(&counts));
    }

    #[test]
    fn exact_rationals_round_trip(k in 1usize..=4, nums in prop::collection::vec(0i64..20, 16)) {
        let cells = 1usize << k;
        let total: i64 = nums[..cells].iter().sum::<i64>().max(1);
        let mut raw: Vec<Ratio<i64>> = nums[..cells].iter().map(|&x| Ratio::new(x, total)).collect();
        if nums[..cells].iter().all(|&x| x == 0) {
            raw[0] = Ratio::one();
        }
        let pi = PartitionMeasureExact::new(k, raw).unwrap();
        let rho: DensityProfileExact = pi_to_rho(&pi);
        prop_assert_eq!(rho_to_pi(&rho).unwrap(), pi);
    }

    #[test]
    fn float_precisions_agree((k, raw) in lattice()) {
        let pi = measure(k, &raw);
        let pi32 = PartitionMeasure::<f32>::new(k, pi.pi().iter().map(|&x| x as f32).collect()).unwrap();
        let r64 = pi_to_rho(&pi);
        let r32 = pi_to_rho(&pi32);
        for (a, b) in r64.rho().iter().zip(r32.rho()) {
            prop_assert!((a - *b as f64).abs() < 1e-5);
        }
    }

    #[test]
    fn max_entropy_residual_is_non_negative(k in 1usize..=3, raw in prop::collection::vec(0.0f64..1.0, 64), zeros in any::<u64>()) {
        let c = 1usize << k;
        let mut m = vec![0.0; c * c];
        let mut i = 0;
        for t in 0..c {
            for u in t..c {
                if t & u == 0 {
                    // knock out some cells to reach the boundary of the polytope
                    let w = if zeros >> (i % 64) & 1 == 1 { 0.0 } else { raw[i % 64] };
                    m[t * c + u] = w;
                    m[u * c + t] = w;
                    i += 1;
                }
            }
        }
        let total: f64 = m.iter().sum();
        prop_assume!(total > 0.0);
        m.iter_mut().for_each(|x| *x /= total);
        let profile = EdgeProfile::new(k, m.clone()).unwrap();
        let residual = max_entropy_check(&profile).unwrap();
        prop_assert!(residual >= -1e-12, "residual {residual}");
        let gap = jensen_gap(&profile.marginal().unwrap(), &m);
        prop_assert!((gap - residual).abs() < 1e-9);
    }

    #[test]
    fn jensen_equality_is_tight(k in 1usize..=3, raw in prop::collection::vec(0.001f64..1.0, 8)) {
        let pi = measure(k, &raw[..1 << k]);
        let m = jensen_equality_matrix(&pi);
        prop_assert!(jensen_gap(&pi, &m).abs() <= 1e-9);
        // columns sum to pi
        let c = 1usize << k;
        for u in 0..c {
            let col: f64 = (0..c).map(|t| m[t * c + u]).sum();
            prop_assert!((col - pi.pi()[u]).abs() < 1e-12);
        }
    }

    #[test]
    fn entropy_hat_is_non_positive((k, raw) in lattice()) {
        let pi = measure(k, &raw);
        prop_assert!(entropy_hat(&pi) <= 1e-15);
        prop_assert!(entropy(pi.pi()) <= (k as f64) * std::f64::consts::LN_2 + 1e-12);
    }
}

#[test]
fn s_k_matches_exact_rational_oracle() {
    for k in 1..=30usize {
        for (a, b) in [(0i64, 1i64), (1, 1), (1, 2), (1, 3), (7, 10), (1, 1000), (999, 1000)] {
            let exact = s_k_exact(&big(a, b), k).to_f64().unwrap();
            let fast = s_k(a as f64 / b as f64, k);
            assert!((fast - exact).abs() <= 1e-12 * exact.abs().max(1.0), "k={k} x={a}/{b}");
            if k <= 12 && b <= 10 {
                let alt = s_k_alternating(Ratio::<i128>::new(a as i128, b as i128), k);
                let exact_q = s_k_exact(&big(a, b), k);
                assert_eq!(
                    BigRational::new(BigInt::from(*alt.numer()), BigInt::from(*alt.denom())),
                    exact_q
                );
            }
        }
    }
}

#[test]
fn inconsistent_profiles_are_named() {
    let rho = DensityProfile::new(2, vec![1.0, 0.3, 0.3, 0.5]).unwrap();
    assert!(matches!(rho_to_pi(&rho), Err(Error::InconsistentProfile { .. })));
    assert!(DensityProfile::new(1, vec![0.9, 0.1]).is_err());
}

fn config_expectation(n: usize, d: usize, counts: &[u64]) -> f64 {
    compatible_edge_counts(counts, d as u64)
        .iter()
        .map(|m| log_expected_z_counts(counts, m, n as u64, d as u64).unwrap().exp())
        .sum()
}

fn brute_mean(n: usize, d: usize, rho: &DensityProfile<f64>) -> f64 {
    let pairings = all_pairings(n, d).unwrap();
    let total: u64 = pairings
        .iter()
        .map(|p| brute_force_z(&config_graph_from_pairing(n, d, p).unwrap(), rho).unwrap())
        .sum();
    total as f64 / pairings.len() as f64
}

#[test]
fn first_moment_matches_brute_force_k1() {
    for (n, d) in [(2usize, 2usize), (4, 2), (4, 3), (6, 2)] {
        for s in 0..=n as u64 {
            let counts = [n as u64 - s, s];
            let rho = DensityProfile::new(1, vec![1.0, s as f64 / n as f64]).unwrap();
            let formula = config_expectation(n, d, &counts);
            let brute = brute_mean(n, d, &rho);
            assert!(
                (formula - brute).abs() <= 1e-9 * brute.abs().max(1e-300) || (formula == 0.0 && brute == 0.0),
                "n={n} d={d} s={s}: {formula} vs {brute}"
            );
        }
    }
}

#[test]
fn first_moment_matches_brute_force_k2() {
    for (n, d) in [(4usize, 2usize), (2, 2), (4, 3)] {
        for c1 in 0..=n as u64 {
            for c2 in 0..=n as u64 - c1 {
                for c3 in 0..=n as u64 - c1 - c2 {
                    let counts = [n as u64 - c1 - c2 - c3, c1, c2, c3];
                    let nf = n as f64;
                    let rho = DensityProfile::new(
                        2,
                        vec![1.0, (c1 + c3) as f64 / nf, (c2 + c3) as f64 / nf, c3 as f64 / nf],
                    )
                    .unwrap();
                    let formula = config_expectation(n, d, &counts);
                    let brute = brute_mean(n, d, &rho);
                    assert!(
                        (formula - brute).abs() <= 1e-9 * brute.max(1e-300) || (formula == 0.0 && brute == 0.0),
                        "n={n} d={d} counts={counts:?}: {formula} vs {brute}"
                    );
                }
            }
        }
    }
}

#[test]
fn er_first_moment_by_simulation() {
    // E[# independent 3-sets in ER(12, 2/12)] = C(12,3) (5/6)^3
    let (n, lambda, m) = (12usize, 2.0, 3u32);
    let exact = 220.0 * (5.0f64 / 6.0).powi(3);
    let rho = DensityProfile::new(1, vec![1.0, m as f64 / n as f64]).unwrap();
    let formula = er_log_expected_z(&rho, n as u64, lambda).unwrap().exp();
    assert!((formula - exact).abs() < 1e-9 * exact);
    let trials = 20_000u64;
    let samples: Vec<f64> = (0..trials)
        .map(|s| {
            let g = sample_er(n, lambda, s).unwrap();
            independent_sets(&g).unwrap().iter().filter(|x| x.count_ones() == m).count() as f64
        })
        .collect();
    let mean = samples.iter().sum::<f64>() / trials as f64;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
    let se = (var / trials as f64).sqrt();
    assert!((mean - exact).abs() <= 3.0 * se, "{mean} ± {se} vs {exact}");
}

#[test]
fn asymptotic_rate_stays_within_budget() {
    for alpha in [vec![1.0], vec![1.0, 1.0], vec![1.5, 0.8], vec![1.9, 1.0, 0.6], vec![0.5, 0.3, 0.2, 0.1]] {
        for d in [10usize, 100, 1000, 10_000, 100_000] {
            let a = asymptotic_rate(&alpha, d).unwrap();
            assert!(a.within_budget(), "alpha={alpha:?} d={d}: {a:?}");
        }
    }
    // alpha = (1, 1): binom_sum = 1, so the leading term is log²d / (2d)
    let d = 1000usize;
    let a = asymptotic_rate(&[1.0, 1.0], d).unwrap();
    let df = d as f64;
    assert!((a.leading - df.ln().powi(2) / (2.0 * df)).abs() < 1e-15);
}

#[test]
fn rate_is_entropy_plus_half_d_hat() {
    let pi = measure(2, &[0.5, 0.2, 0.2, 0.1]);
    let d = 7;
    let w = pi.weights();
    let h: f64 = pi.pi().iter().map(|p| -p * p.ln()).sum();
    let hat: f64 = pi.pi().iter().zip(&w).map(|(p, w)| p * w.ln()).sum();
    assert!((rate_bound(&pi, d) - (h + 3.5 * hat)).abs() < 1e-14);
}
