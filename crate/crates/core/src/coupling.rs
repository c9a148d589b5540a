//! Correlated families of factor-of-i.i.d. independent sets.
//!
//! Copy `i` uses the base labelling `X_0` off a Bernoulli(`p`) set `S` and a
//! fresh labelling `X_i` on `S`. On Erdős–Rényi hosts the edges inside `S`
//! are redrawn per copy as well. At `p = 0` all copies coincide; at `p = 1`
//! they are independent.

use crate::error::{invalid, Error, Result};
use crate::factor::{apply_factor, Factor};
use crate::graph::{
    er_resample, is_tree_ball, neighborhood, sample_config_model, sample_er, LazyTree,
    MultiGraph, Offspring, TreeView,
};
use crate::profiles::{binom_sum, cell_counts};
use crate::rng::{derive, hash2, tag, LabelScheme, Labelling, Percolation};
use crate::stats::{merge_all, run_trials, Accumulator, Estimate};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Where the independent sets live.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "host", rename_all = "kebab-case")]
pub enum Host {
    RegularTree { d: usize },
    ConfigModel { n: usize, d: usize },
    Er { n: usize, lambda: f64 },
}

impl Host {
    /// The `log(d)/d` (or `log(lambda)/lambda`) scale of the densities.
    pub fn scale(&self) -> f64 {
        let x = match *self {
            Host::RegularTree { d } | Host::ConfigModel { d, .. } => d as f64,
            Host::Er { lambda, .. } => lambda,
        };
        x.ln() / x
    }

    /// `d` or `lambda`, for reporting.
    pub fn degree_param(&self) -> f64 {
        match *self {
            Host::RegularTree { d } | Host::ConfigModel { d, .. } => d as f64,
            Host::Er { lambda, .. } => lambda,
        }
    }

    /// Vertex count of a finite host.
    pub fn n(&self) -> Option<usize> {
        match *self {
            Host::RegularTree { .. } => None,
            Host::ConfigModel { n, .. } | Host::Er { n, .. } => Some(n),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Host::RegularTree { d } if d < 2 => Err(invalid("regular tree needs d >= 2")),
            Host::ConfigModel { n, d } if n == 0 || d == 0 || (n * d) % 2 == 1 => {
                Err(invalid(format!("configuration model needs n*d even and positive, got n={n}, d={d}")))
            }
            Host::Er { n, lambda } if n == 0 || !(0.0..=n as f64).contains(&lambda) => {
                Err(invalid(format!("ER host needs n >= 1 and 0 <= lambda <= n, got n={n}, lambda={lambda}")))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Host {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Host::RegularTree { d } => write!(f, "regular-tree:{d}"),
            Host::ConfigModel { n, d } => write!(f, "config:{n}:{d}"),
            Host::Er { n, lambda } => write!(f, "er:{n}:{lambda}"),
        }
    }
}

impl FromStr for Host {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |x: &str, field: &str| -> Result<f64> {
            x.parse()
                .map_err(|_| invalid(format!("host {field} {x:?} is not a number")))
        };
        let int = |x: &str, field: &str| -> Result<usize> {
            x.parse()
                .map_err(|_| invalid(format!("host {field} {x:?} is not an integer")))
        };
        let host = match parts.as_slice() {
            ["regular-tree", d] => Host::RegularTree { d: int(d, "d")? },
            ["config", n, d] => Host::ConfigModel {
                n: int(n, "n")?,
                d: int(d, "d")?,
            },
            ["er", n, l] => Host::Er {
                n: int(n, "n")?,
                lambda: num(l, "lambda")?,
            },
            _ => {
                return Err(invalid(format!(
                    "host {s:?}: expected regular-tree:D, config:N:D or er:N:LAMBDA"
                )))
            }
        };
        host.validate()?;
        Ok(host)
    }
}

/// Estimator for `E[Q^m]` from `B` successes in `N` inner trials.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MomentEstimator {
    /// `(B/N)^m`, biased by `O(m^2 / N)`.
    Plugin,
    /// Delete-one jackknife correction of the plug-in estimate.
    #[default]
    Jackknife,
    /// `B^(m) / N^(m)` with falling factorials; unbiased, integer `m` only.
    Unbiased,
}

impl MomentEstimator {
    pub fn estimate(self, successes: u64, n: u64, m: f64) -> f64 {
        let (b, nf) = (successes as f64, n as f64);
        let g = |x: f64| if m == 0.0 { 1.0 } else { x.powf(m) };
        match self {
            MomentEstimator::Plugin => g(b / nf),
            MomentEstimator::Jackknife => {
                if n < 2 {
                    return g(b / nf);
                }
                let loo_success = if successes > 0 { g((b - 1.0) / (nf - 1.0)) } else { 0.0 };
                let loo_failure = g(b / (nf - 1.0));
                let mean_loo = (b * loo_success + (nf - b) * loo_failure) / nf;
                nf * g(b / nf) - (nf - 1.0) * mean_loo
            }
            MomentEstimator::Unbiased => {
                let mi = m.round() as u64;
                (0..mi).fold(1.0, |acc, j| {
                    if j >= n {
                        f64::NAN
                    } else {
                        acc * (successes.saturating_sub(j)) as f64 / (n - j) as f64
                    }
                })
            }
        }
    }
}

/// Everything needed to run (and replay) a coupling experiment.
#[derive(Debug, Clone)]
pub struct CouplingConfig {
    pub p: f64,
    pub k: usize,
    pub factor: Factor,
    pub host: Host,
    pub trials: u64,
    pub inner_trials: u64,
    pub seed: u64,
    pub estimator: MomentEstimator,
}

/// Largest number of copies in a coupling run.
pub const MAX_COPIES: usize = 12;
pub const DEFAULT_INNER_TRIALS: u64 = 400;

impl CouplingConfig {
    pub fn new(factor: Factor, host: Host, p: f64, k: usize, trials: u64, seed: u64) -> Self {
        Self {
            p,
            k,
            factor,
            host,
            trials,
            inner_trials: DEFAULT_INNER_TRIALS,
            seed,
            estimator: MomentEstimator::default(),
        }
    }

    pub fn with_inner_trials(mut self, inner: u64) -> Self {
        self.inner_trials = inner;
        self
    }

    pub fn with_p(&self, p: f64) -> Self {
        Self { p, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p) {
            return Err(invalid(format!("p = {} outside [0,1]", self.p)));
        }
        if self.k == 0 || self.k > MAX_COPIES {
            return Err(invalid(format!("k = {} outside 1..={MAX_COPIES}", self.k)));
        }
        if self.trials == 0 || self.inner_trials == 0 {
            return Err(invalid("trials and inner trials must be positive"));
        }
        self.host.validate()
    }
}

/// Bernoulli(`p`) subset of `0..n`, nested in `p` for a fixed seed.
pub fn percolate(n: usize, p: f64, seed: u64) -> Vec<bool> {
    let s = Percolation::new(seed, p);
    (0..n as u64).map(|v| s.contains(v)).collect()
}

/// `k` graphs agreeing with `g` off `subset x subset`, each with its own
/// independent redraw of the pairs inside the subset.
pub fn er_resample_graphs(
    g: &MultiGraph,
    subset: &[bool],
    lambda: f64,
    k: usize,
    seed: u64,
) -> Result<Vec<MultiGraph>> {
    (0..k)
        .map(|i| er_resample(g, subset, lambda, derive(seed, tag::COPY, i as u64 + 1)))
        .collect()
}

/// Randomness of one outer trial.
#[derive(Clone, Copy)]
struct TrialSeeds {
    structure: u64,
    subset: Percolation,
    base: u64,
    trial: u64,
}

impl TrialSeeds {
    fn new(cfg: &CouplingConfig, t: u64) -> Self {
        let trial = derive(cfg.seed, tag::TRIAL, t);
        Self {
            structure: derive(trial, tag::STRUCTURE, 0),
            subset: Percolation::new(derive(trial, tag::SUBSET, 0), cfg.p),
            base: derive(trial, tag::LABEL, 0),
            trial,
        }
    }

    fn copy(&self, i: u64) -> u64 {
        derive(self.trial, tag::COPY, i)
    }

    fn inner(&self, j: u64) -> u64 {
        derive(self.trial, tag::INNER, j)
    }

    fn labels(&self, copy_seed: u64) -> LabelScheme {
        LabelScheme::coupled(self.base, self.subset, copy_seed)
    }
}

/// Densities of all intersections `∩_{i∈T} I_i`, indexed by bitmask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntersectionEstimate {
    pub k: usize,
    /// `profile[T]` for every `T ⊆ [k]`; `profile[0]` is the constant 1.
    pub profile: Vec<Estimate>,
    /// Mean fraction of vertices whose `(r+1)`-ball is not a tree, on
    /// finite hosts.
    pub non_tree_fraction: Option<Estimate>,
    pub trials: u64,
}

impl IntersectionEstimate {
    /// Density of `I_1 ∩ ... ∩ I_i`.
    pub fn prefix(&self, i: usize) -> Estimate {
        self.profile[(1 << i) - 1]
    }

    pub fn prefixes(&self) -> Vec<Estimate> {
        (1..=self.k).map(|i| self.prefix(i)).collect()
    }

    /// Prefix densities divided by the host's `log(d)/d` scale.
    pub fn alphas(&self, scale: f64) -> Vec<f64> {
        self.prefixes().iter().map(|e| e.mean / scale).collect()
    }
}

fn root_bit_on_graph<L: Labelling + ?Sized>(
    f: &Factor,
    g: &MultiGraph,
    v: usize,
    labels: &L,
) -> bool {
    let r = f.radius();
    is_tree_ball(g, v, r + 1)
        && apply_factor(f, &neighborhood(g, v, r, labels)).expect("ball has the factor radius")
}

fn project_masked<L: Labelling + Sync + ?Sized>(
    f: &Factor,
    g: &MultiGraph,
    tree_ok: &[bool],
    labels: &L,
) -> Vec<bool> {
    let r = f.radius();
    (0..g.n())
        .into_par_iter()
        .map(|v| {
            tree_ok[v]
                && apply_factor(f, &neighborhood(g, v, r, labels))
                    .expect("ball has the factor radius")
        })
        .collect()
}

fn tree_mask(g: &MultiGraph, r: usize) -> Vec<bool> {
    (0..g.n())
        .into_par_iter()
        .map(|v| is_tree_ball(g, v, r + 1))
        .collect()
}

/// Per-trial profile: indicator or density of every intersection.
fn profile_of_sets(sets: &[Vec<bool>]) -> Vec<f64> {
    let counts = cell_counts(sets).expect("sets share a length");
    let n = sets[0].len().max(1) as f64;
    // superset sums turn cell counts into intersection sizes
    let mut rho: Vec<f64> = counts.iter().map(|&c| c as f64 / n).collect();
    let k = sets.len();
    for i in 0..k {
        for t in 0..rho.len() {
            if t & (1 << i) == 0 {
                rho[t] += rho[t | (1 << i)];
            }
        }
    }
    rho
}

struct ProfileState {
    profile: Vec<Accumulator>,
    non_tree: Accumulator,
}

fn run_coupled(cfg: &CouplingConfig) -> Result<IntersectionEstimate> {
    cfg.validate()?;
    let k = cfg.k;
    let f = &cfg.factor;
    let r = f.radius();
    let cells = 1usize << k;
    let state = run_trials(
        cfg.trials,
        || ProfileState {
            profile: vec![Accumulator::default(); cells],
            non_tree: Accumulator::default(),
        },
        |st, t| {
            let seeds = TrialSeeds::new(cfg, t);
            let (rho, non_tree) = match cfg.host {
                Host::RegularTree { d } => {
                    let tree = LazyTree::new(Offspring::Regular { d }, seeds.structure);
                    let mut pattern = 0usize;
                    for i in 0..k {
                        let labels = seeds.labels(seeds.copy(i as u64 + 1));
                        let view = TreeView::new(&tree, &labels, tree.root(), r);
                        if apply_factor(f, &view).expect("view has the factor radius") {
                            pattern |= 1 << i;
                        }
                    }
                    let rho = (0..cells)
                        .map(|t| if pattern & t == t { 1.0 } else { 0.0 })
                        .collect();
                    (rho, None)
                }
                Host::ConfigModel { n, d } => {
                    let g = sample_config_model(n, d, seeds.structure).expect("validated host");
                    let ok = tree_mask(&g, r);
                    let sets: Vec<Vec<bool>> = (0..k)
                        .map(|i| project_masked(f, &g, &ok, &seeds.labels(seeds.copy(i as u64 + 1))))
                        .collect();
                    debug_assert!(sets.iter().all(|s| g.is_independent(s)));
                    let bad = ok.iter().filter(|&&b| !b).count() as f64 / n as f64;
                    (profile_of_sets(&sets), Some(bad))
                }
                Host::Er { n, lambda } => {
                    let g = sample_er(n, lambda, seeds.structure).expect("validated host");
                    let subset: Vec<bool> =
                        (0..n as u64).map(|v| seeds.subset.contains(v)).collect();
                    let mut bad = 0.0;
                    let sets: Vec<Vec<bool>> = (0..k)
                        .map(|i| {
                            let copy = seeds.copy(i as u64 + 1);
                            let gi = er_resample(&g, &subset, lambda, copy).expect("same n");
                            let ok = tree_mask(&gi, r);
                            bad += ok.iter().filter(|&&b| !b).count() as f64 / (n * k) as f64;
                            project_masked(f, &gi, &ok, &seeds.labels(copy))
                        })
                        .collect();
                    (profile_of_sets(&sets), Some(bad))
                }
            };
            for (acc, x) in st.profile.iter_mut().zip(rho) {
                acc.push(x);
            }
            if let Some(b) = non_tree {
                st.non_tree.push(b);
            }
        },
        |a, b| {
            merge_all(&mut a.profile, &b.profile);
            a.non_tree.merge(&b.non_tree);
        },
    );
    Ok(IntersectionEstimate {
        k,
        profile: state.profile.iter().map(Accumulator::estimate).collect(),
        non_tree_fraction: cfg.host.n().map(|_| state.non_tree.estimate()),
        trials: cfg.trials,
    })
}

/// Root-bit intersections of `k` coupled copies on the `d`-regular tree.
pub fn coupled_tree_intersections(cfg: &CouplingConfig) -> Result<IntersectionEstimate> {
    match cfg.host {
        Host::RegularTree { .. } => run_coupled(cfg),
        _ => Err(invalid("coupled_tree_intersections needs a regular-tree host")),
    }
}

/// Full density profiles of `k` coupled projections on configuration-model
/// graphs.
pub fn coupled_graph_intersections(cfg: &CouplingConfig) -> Result<IntersectionEstimate> {
    match cfg.host {
        Host::ConfigModel { .. } => run_coupled(cfg),
        _ => Err(invalid("coupled_graph_intersections needs a config-model host")),
    }
}

/// Full density profiles of `k` coupled copies on Erdős–Rényi graphs with
/// edges inside `S` redrawn per copy.
pub fn coupled_er_intersections(cfg: &CouplingConfig) -> Result<IntersectionEstimate> {
    match cfg.host {
        Host::Er { .. } => run_coupled(cfg),
        _ => Err(invalid("coupled_er_intersections needs an ER host")),
    }
}

/// Any host.
pub fn coupled_intersections(cfg: &CouplingConfig) -> Result<IntersectionEstimate> {
    run_coupled(cfg)
}

/// Conditional stability moments `E*[Q^m]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityEstimate {
    /// `(m, E*[Q^m])`.
    pub moments: Vec<(f64, Estimate)>,
    /// Fraction of outer trials with the root in the set: the density.
    pub acceptance: Estimate,
    /// Mean of the raw inner fractions.
    pub q: Estimate,
    pub q_min: f64,
    pub q_max: f64,
    pub accepted: u64,
    pub attempted: u64,
    pub inner_trials: u64,
}

impl StabilityEstimate {
    pub fn moment(&self, m: f64) -> Option<Estimate> {
        self.moments.iter().find(|(x, _)| *x == m).map(|&(_, e)| e)
    }

    /// `E*[Q^m] * density`, which should match the density of an
    /// `(m+1)`-fold intersection; the error combines both standard errors.
    pub fn implied_intersection(&self, m: f64) -> Option<Estimate> {
        let e = self.moment(m)?;
        let d = self.acceptance;
        Some(Estimate {
            mean: e.mean * d.mean,
            std_error: (e.std_error * d.mean).hypot(e.mean * d.std_error),
            samples: e.samples,
        })
    }
}

#[derive(Clone)]
struct StabilityState {
    moments: Vec<Accumulator>,
    accept: Accumulator,
    q: Accumulator,
    q_min: f64,
    q_max: f64,
}

/// Outer trials sample the host, `X_0` and `S` and keep only those with the
/// root in the set; each kept trial resamples the labels on `S` (and on ER
/// hosts the edges inside `S`) `inner_trials` times and records the
/// fraction of resamples keeping the root. On finite hosts the root is a
/// uniformly random vertex.
pub fn estimate_stability(cfg: &CouplingConfig, moments: &[f64]) -> Result<StabilityEstimate> {
    cfg.validate()?;
    if moments.iter().any(|&m| m < 0.0 || !m.is_finite()) {
        return Err(invalid("moment orders must be finite and non-negative"));
    }
    if cfg.estimator == MomentEstimator::Unbiased && moments.iter().any(|m| m.fract() != 0.0) {
        return Err(invalid("the unbiased estimator needs integer moment orders"));
    }
    let f = &cfg.factor;
    let r = f.radius();
    let inner = cfg.inner_trials;
    let state = run_trials(
        cfg.trials,
        || StabilityState {
            moments: vec![Accumulator::default(); moments.len()],
            accept: Accumulator::default(),
            q: Accumulator::default(),
            q_min: f64::INFINITY,
            q_max: f64::NEG_INFINITY,
        },
        |st, t| {
            let seeds = TrialSeeds::new(cfg, t);
            let base = LabelScheme::iid(seeds.base);
            let successes: Option<u64> = match cfg.host {
                Host::RegularTree { d } => {
                    let tree = LazyTree::new(Offspring::Regular { d }, seeds.structure);
                    let bit = |labels: &LabelScheme| {
                        apply_factor(f, &TreeView::new(&tree, labels, tree.root(), r))
                            .expect("view has the factor radius")
                    };
                    bit(&base).then(|| {
                        (1..=inner)
                            .filter(|&j| bit(&seeds.labels(seeds.inner(j))))
                            .count() as u64
                    })
                }
                Host::ConfigModel { n, d } => {
                    let g = sample_config_model(n, d, seeds.structure).expect("validated host");
                    let v = (hash2(seeds.trial, tag::ROOT) % n as u64) as usize;
                    root_bit_on_graph(f, &g, v, &base).then(|| {
                        (1..=inner)
                            .filter(|&j| root_bit_on_graph(f, &g, v, &seeds.labels(seeds.inner(j))))
                            .count() as u64
                    })
                }
                Host::Er { n, lambda } => {
                    let g = sample_er(n, lambda, seeds.structure).expect("validated host");
                    let v = (hash2(seeds.trial, tag::ROOT) % n as u64) as usize;
                    let subset: Vec<bool> =
                        (0..n as u64).map(|u| seeds.subset.contains(u)).collect();
                    root_bit_on_graph(f, &g, v, &base).then(|| {
                        (1..=inner)
                            .filter(|&j| {
                                let s = seeds.inner(j);
                                let gj = er_resample(&g, &subset, lambda, s).expect("same n");
                                root_bit_on_graph(f, &gj, v, &seeds.labels(s))
                            })
                            .count() as u64
                    })
                }
            };
            st.accept.push(successes.is_some() as u8 as f64);
            if let Some(b) = successes {
                let q = b as f64 / inner as f64;
                st.q.push(q);
                st.q_min = st.q_min.min(q);
                st.q_max = st.q_max.max(q);
                for (acc, &m) in st.moments.iter_mut().zip(moments) {
                    acc.push(cfg.estimator.estimate(b, inner, m));
                }
            }
        },
        |a, b| {
            merge_all(&mut a.moments, &b.moments);
            a.accept.merge(&b.accept);
            a.q.merge(&b.q);
            a.q_min = a.q_min.min(b.q_min);
            a.q_max = a.q_max.max(b.q_max);
        },
    );
    if state.q.count == 0 {
        return Err(Error::ConditioningNotObserved { trials: cfg.trials });
    }
    Ok(StabilityEstimate {
        moments: moments
            .iter()
            .zip(&state.moments)
            .map(|(&m, acc)| (m, acc.estimate()))
            .collect(),
        acceptance: state.accept.estimate(),
        q: state.q.estimate(),
        q_min: state.q_min,
        q_max: state.q_max,
        accepted: state.q.count,
        attempted: cfg.trials,
        inner_trials: inner,
    })
}

/// One grid point of a p-scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub p: f64,
    pub intersections: IntersectionEstimate,
    /// `E*[Q^m]` for `m = 0..k-1`, when requested.
    pub stability: Option<StabilityEstimate>,
    /// `Σ_{i≤2} (-1)^{i-1} C(2,i) α_i (2 - α_i)` on the host's scale.
    pub binom_sum_2: f64,
    pub binom_sum_3: f64,
}

/// Result of [`scan_p`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scan {
    pub rows: Vec<ScanRow>,
    /// Largest change of any prefix density between neighbouring grid
    /// points.
    pub max_adjacent_jump: f64,
}

/// Runs the coupling at every grid point with common seeds (so the
/// percolated sets are nested across `p`). At least three copies are
/// simulated so both binomial statistics are available.
pub fn scan_p(cfg: &CouplingConfig, grid: &[f64], with_stability: bool) -> Result<Scan> {
    if grid.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(invalid("grid points must lie in [0,1]"));
    }
    let scale = cfg.host.scale();
    if !(scale > 0.0) {
        return Err(invalid("binomial statistics need d or lambda above 1"));
    }
    let mut rows = Vec::with_capacity(grid.len());
    for &p in grid {
        let mut c = cfg.with_p(p);
        c.k = cfg.k.max(3);
        let inter = run_coupled(&c)?;
        let alphas = inter.alphas(scale);
        let stability = if with_stability {
            let orders: Vec<f64> = (0..cfg.k).map(|m| m as f64).collect();
            Some(estimate_stability(&cfg.with_p(p), &orders)?)
        } else {
            None
        };
        rows.push(ScanRow {
            p,
            binom_sum_2: binom_sum(&alphas[..2]),
            binom_sum_3: binom_sum(&alphas[..3]),
            intersections: inter,
            stability,
        });
    }
    let max_adjacent_jump = rows
        .windows(2)
        .flat_map(|w| {
            let (a, b) = (w[0].intersections.prefixes(), w[1].intersections.prefixes());
            a.into_iter()
                .zip(b)
                .map(|(x, y)| (x.mean - y.mean).abs())
                .collect::<Vec<_>>()
        })
        .fold(0.0, f64::max);
    Ok(Scan {
        rows,
        max_adjacent_jump,
    })
}

/// Outcome of [`find_p_for_moment`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentSolution {
    pub p: f64,
    pub value: Estimate,
    pub evaluations: usize,
}

/// Finds `p` with `E*[Q^u](p)` equal to `target` up to three standard
/// errors. Scans `coarse` evenly spaced points, then bisects the first
/// bracket where `estimate - target` changes sign. Monotonicity in `p` is
/// not assumed.
pub fn find_p_for_moment(
    cfg: &CouplingConfig,
    u: f64,
    target: f64,
    coarse: usize,
    max_bisections: usize,
) -> Result<MomentSolution> {
    if !(u > 0.0) {
        return Err(invalid("moment order u must be positive"));
    }
    let coarse = coarse.max(2);
    let mut evaluations = 0;
    let mut eval = |p: f64| -> Result<Estimate> {
        evaluations += 1;
        let s = estimate_stability(&cfg.with_p(p), &[u])?;
        Ok(s.moments[0].1)
    };
    let close = |e: &Estimate| (e.mean - target).abs() <= 3.0 * e.std_error + 1e-12;
    let grid: Vec<f64> = (0..coarse).map(|i| i as f64 / (coarse - 1) as f64).collect();
    let mut prev: Option<(f64, Estimate)> = None;
    let mut bracket = None;
    for &p in &grid {
        let e = eval(p)?;
        if close(&e) {
            return Ok(MomentSolution {
                p,
                value: e,
                evaluations,
            });
        }
        if let Some((q, eq)) = prev {
            if (eq.mean - target).signum() != (e.mean - target).signum() {
                bracket = Some((q, eq, p, e));
                break;
            }
        }
        prev = Some((p, e));
    }
    let Some((mut lo, mut elo, mut hi, mut ehi)) = bracket else {
        return Err(Error::NoCrossing { target });
    };
    for _ in 0..max_bisections {
        let mid = 0.5 * (lo + hi);
        let e = eval(mid)?;
        if close(&e) {
            return Ok(MomentSolution {
                p: mid,
                value: e,
                evaluations,
            });
        }
        if (e.mean - target).signum() == (elo.mean - target).signum() {
            lo = mid;
            elo = e;
        } else {
            hi = mid;
            ehi = e;
        }
    }
    // return the better end of the final bracket
    let (p, value) = if (elo.mean - target).abs() <= (ehi.mean - target).abs() {
        (lo, elo)
    } else {
        (hi, ehi)
    };
    Ok(MomentSolution {
        p,
        value,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn host_strings() {
        for s in ["regular-tree:3", "config:1000:3", "er:1000:2.5"] {
            assert_eq!(Host::from_str(s).unwrap().to_string(), s);
        }
        assert!(Host::from_str("config:3:3").is_err());
        assert!(Host::from_str("er:5:6").is_err());
        assert!(Host::from_str("tree:3").is_err());
    }

    #[test]
    fn percolation_extremes() {
        assert!(percolate(100, 0.0, 1).iter().all(|&b| !b));
        assert!(percolate(100, 1.0, 1).iter().all(|&b| b));
    }

    #[test]
    fn jackknife_is_exact_for_first_moment() {
        for b in 0..=10 {
            let j = MomentEstimator::Jackknife.estimate(b, 10, 1.0);
            assert!((j - b as f64 / 10.0).abs() < 1e-15);
        }
    }

    #[test]
    fn jackknife_second_moment_is_unbiased() {
        // for g(x) = x^2 the jackknife equals B(B-1)/(N(N-1))
        for b in 0..=12 {
            let j = MomentEstimator::Jackknife.estimate(b, 12, 2.0);
            let u = MomentEstimator::Unbiased.estimate(b, 12, 2.0);
            assert!((j - u).abs() < 1e-12, "b={b}: {j} vs {u}");
        }
    }

    #[test]
    fn zero_moment_is_one() {
        for est in [MomentEstimator::Plugin, MomentEstimator::Jackknife, MomentEstimator::Unbiased] {
            assert_eq!(est.estimate(3, 10, 0.0), 1.0);
        }
    }

    #[test]
    fn p_zero_copies_coincide_on_tree() {
        let cfg = CouplingConfig::new(
            Factor::greedy_threshold(),
            Host::RegularTree { d: 3 },
            0.0,
            3,
            2000,
            5,
        );
        let est = coupled_tree_intersections(&cfg).unwrap();
        for t in 1..8 {
            assert_eq!(est.profile[t].mean, est.profile[1].mean);
        }
    }

    #[test]
    fn stability_at_p_zero_is_one() {
        let cfg = CouplingConfig::new(
            Factor::greedy_threshold(),
            Host::RegularTree { d: 3 },
            0.0,
            3,
            500,
            5,
        )
        .with_inner_trials(20);
        let s = estimate_stability(&cfg, &[0.0, 1.0, 2.0]).unwrap();
        for (_, e) in &s.moments {
            assert_eq!(e.mean, 1.0);
        }
        assert_eq!((s.q_min, s.q_max), (1.0, 1.0));
    }

    #[test]
    fn conditioning_failure_is_reported() {
        let cfg = CouplingConfig::new(Factor::zero(), Host::RegularTree { d: 3 }, 0.5, 2, 50, 1)
            .with_inner_trials(3);
        assert_eq!(
            estimate_stability(&cfg, &[1.0]),
            Err(Error::ConditioningNotObserved { trials: 50 })
        );
    }

    #[test]
    fn wrong_host_rejected() {
        let cfg = CouplingConfig::new(Factor::zero(), Host::Er { n: 10, lambda: 2.0 }, 0.5, 2, 5, 1);
        assert!(coupled_tree_intersections(&cfg).is_err());
        assert!(coupled_graph_intersections(&cfg).is_err());
        assert!(coupled_er_intersections(&cfg).is_ok());
    }
}
