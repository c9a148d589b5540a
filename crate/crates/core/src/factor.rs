//! Local decision rules ("factors") and their evaluation on trees and
//! finite graphs.

use crate::error::{invalid, Error, Result};
use crate::graph::{
    is_tree_ball, neighborhood, sample_pgw_tree, sample_regular_tree, MultiGraph, Neighborhood,
    Truncated,
};
use crate::rng::{cmp_labels, derive, tag, Labelling};
use crate::stats::{run_trials, Accumulator, Estimate};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::cell::RefCell;
use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

/// A deterministic rule reading a rooted labelled neighbourhood.
///
/// Rules see vertices only through [`Neighborhood`], so they cannot depend
/// on vertex ids beyond the tie-breaking key.
pub trait Rule: Send + Sync {
    fn decide(&self, nb: &dyn Neighborhood) -> bool;
}

impl<F: Fn(&dyn Neighborhood) -> bool + Send + Sync> Rule for F {
    fn decide(&self, nb: &dyn Neighborhood) -> bool {
        self(nb)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FactorKind {
    LauerWormald,
    GreedyThreshold,
    Custom,
}

/// Serializable description of a factor: `{kind, radius, params}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorSpec {
    pub kind: FactorKind,
    pub radius: usize,
    pub params: serde_json::Value,
}

#[derive(Clone)]
pub struct Factor {
    spec: FactorSpec,
    rule: Arc<dyn Rule>,
}

impl fmt::Debug for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Factor").field("spec", &self.spec).finish()
    }
}

impl Factor {
    pub fn custom(name: &str, radius: usize, rule: impl Rule + 'static) -> Self {
        Self {
            spec: FactorSpec {
                kind: FactorKind::Custom,
                radius,
                params: json!({ "name": name }),
            },
            rule: Arc::new(rule),
        }
    }

    /// The factor that never includes anything.
    pub fn zero() -> Self {
        Self::custom("zero", 0, |_: &dyn Neighborhood| false)
    }

    /// Include the root when its label is below every neighbour's label.
    pub fn greedy_threshold() -> Self {
        Self {
            spec: FactorSpec {
                kind: FactorKind::GreedyThreshold,
                radius: 1,
                params: json!({}),
            },
            rule: Arc::new(GreedyThreshold),
        }
    }

    /// The Lauer–Wormald construction with `k` rounds of Bernoulli(`p`)
    /// percolation; radius `k + 1`.
    pub fn lauer_wormald(p: f64, k: usize) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(invalid(format!("Lauer-Wormald p = {p} outside (0,1)")));
        }
        if k == 0 {
            return Err(invalid("Lauer-Wormald needs k >= 1"));
        }
        Ok(Self {
            spec: FactorSpec {
                kind: FactorKind::LauerWormald,
                radius: k + 1,
                params: json!({ "p": p, "k": k }),
            },
            rule: Arc::new(LauerWormald::new(p, k)),
        })
    }

    pub fn from_spec(spec: &FactorSpec) -> Result<Self> {
        let f = match spec.kind {
            FactorKind::LauerWormald => {
                let p = spec.params["p"]
                    .as_f64()
                    .ok_or_else(|| invalid("factor params.p missing"))?;
                let k = spec.params["k"]
                    .as_u64()
                    .ok_or_else(|| invalid("factor params.k missing"))?;
                Self::lauer_wormald(p, k as usize)?
            }
            FactorKind::GreedyThreshold => Self::greedy_threshold(),
            FactorKind::Custom => match spec.params["name"].as_str() {
                Some("zero") => Self::zero(),
                other => return Err(invalid(format!("unknown custom factor {other:?}"))),
            },
        };
        if f.spec.radius != spec.radius {
            return Err(invalid(format!(
                "factor radius {} does not match its parameters ({})",
                spec.radius, f.spec.radius
            )));
        }
        Ok(f)
    }

    pub fn spec(&self) -> &FactorSpec {
        &self.spec
    }

    pub fn kind(&self) -> FactorKind {
        self.spec.kind
    }

    pub fn radius(&self) -> usize {
        self.spec.radius
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.spec).expect("factor spec serializes")
    }

    /// Compact form accepted by [`FromStr`]: `lw:P:K`, `greedy`, `zero`.
    pub fn short_name(&self) -> String {
        match self.spec.kind {
            FactorKind::LauerWormald => format!(
                "lw:{}:{}",
                self.spec.params["p"].as_f64().unwrap_or(f64::NAN),
                self.spec.params["k"].as_u64().unwrap_or(0)
            ),
            FactorKind::GreedyThreshold => "greedy".into(),
            FactorKind::Custom => self.spec.params["name"]
                .as_str()
                .unwrap_or("custom")
                .to_string(),
        }
    }
}

impl FromStr for Factor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            ["zero"] => Ok(Self::zero()),
            ["greedy"] => Ok(Self::greedy_threshold()),
            ["lw", p, k] => {
                let p = p
                    .parse()
                    .map_err(|_| invalid(format!("factor p {p:?} is not a number")))?;
                let k = k
                    .parse()
                    .map_err(|_| invalid(format!("factor k {k:?} is not an integer")))?;
                Self::lauer_wormald(p, k)
            }
            _ => {
                if s.trim_start().starts_with('{') {
                    let spec: FactorSpec = serde_json::from_str(s)
                        .map_err(|e| invalid(format!("factor json: {e}")))?;
                    Self::from_spec(&spec)
                } else {
                    Err(invalid(format!(
                        "factor {s:?}: expected lw:P:K, greedy, zero or a JSON spec"
                    )))
                }
            }
        }
    }
}

struct GreedyThreshold;

impl Rule for GreedyThreshold {
    fn decide(&self, nb: &dyn Neighborhood) -> bool {
        let root = nb.root();
        let mine = (nb.label(root), nb.key(root));
        nb.neighbors(root)
            .into_iter()
            .all(|w| w != root && cmp_labels(mine, (nb.label(w), nb.key(w))) == Ordering::Less)
    }
}

/// Rounds `1..=k`: in round `i` every still-undecided vertex joins `S_i`
/// with probability `p`, and `S_i` together with its neighbours leaves the
/// undecided pool. Members of `∪ S_i` adjacent to another member are then
/// dropped.
///
/// Only a vertex's first successful round matters, since a vertex either
/// joins at that round or has already left the pool. That round is read
/// from the label as a geometric variable by inversion.
struct LauerWormald {
    k: usize,
    log_q: f64,
}

impl LauerWormald {
    fn new(p: f64, k: usize) -> Self {
        Self {
            k,
            log_q: (-p).ln_1p(),
        }
    }

    /// First round whose coin succeeds; `k + 1` stands for "after round k".
    fn round(&self, u: f64) -> usize {
        let t = ((-u).ln_1p() / self.log_q).floor();
        if t.is_finite() && t < self.k as f64 {
            t as usize + 1
        } else {
            self.k + 1
        }
    }
}

struct LwState<'a> {
    rule: &'a LauerWormald,
    nb: &'a dyn Neighborhood,
    rounds: RefCell<HashMap<usize, usize>>,
    selected: RefCell<HashMap<usize, bool>>,
}

impl LwState<'_> {
    fn round(&self, v: usize) -> usize {
        *self
            .rounds
            .borrow_mut()
            .entry(v)
            .or_insert_with(|| self.rule.round(self.nb.label(v).value()))
    }

    /// Neighbours of `v` with round strictly below `limit` (or equal, when
    /// `inclusive`), sorted by round.
    fn earlier(&self, v: usize, limit: usize, inclusive: bool) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = self
            .nb
            .neighbors(v)
            .into_iter()
            .filter(|&w| w != v)
            .map(|w| (self.round(w), w))
            .filter(|&(t, _)| t < limit || (inclusive && t == limit))
            .collect();
        out.sort_unstable();
        out
    }

    /// Whether `v` ever joins some `S_i`.
    fn selected(&self, v: usize) -> bool {
        if let Some(&s) = self.selected.borrow().get(&v) {
            return s;
        }
        let tv = self.round(v);
        let s = tv <= self.rule.k
            && (tv == 1
                || self
                    .earlier(v, tv, false)
                    .into_iter()
                    .all(|(_, w)| !self.selected(w)));
        self.selected.borrow_mut().insert(v, s);
        s
    }
}

impl Rule for LauerWormald {
    fn decide(&self, nb: &dyn Neighborhood) -> bool {
        let state = LwState {
            rule: self,
            nb,
            rounds: RefCell::new(HashMap::new()),
            selected: RefCell::new(HashMap::new()),
        };
        let root = nb.root();
        if !state.selected(root) {
            return false;
        }
        let tr = state.round(root);
        // a loop makes the root its own neighbour in the same round
        if nb.neighbors(root).contains(&root) {
            return false;
        }
        state
            .earlier(root, tr, true)
            .into_iter()
            .filter(|&(t, _)| t == tr)
            .all(|(_, w)| !state.selected(w))
    }
}

/// Evaluates `f` at the root of `nb`, restricted to `f`'s radius.
pub fn apply_factor(f: &Factor, nb: &dyn Neighborhood) -> Result<bool> {
    let need = f.radius();
    let have = nb.radius();
    if have < need {
        return Err(Error::RadiusTooSmall { have, need });
    }
    if have == need {
        Ok(f.rule.decide(nb))
    } else {
        Ok(f.rule.decide(&Truncated::new(nb, need)))
    }
}

/// The closed-form limit density of the Lauer–Wormald sets on `T_d` with
/// its elementary bracket.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaBracket {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
}

pub fn beta_formula(d: usize) -> Result<BetaBracket> {
    if d < 3 {
        return Err(invalid(format!("beta(d) needs d >= 3, got {d}")));
    }
    let df = d as f64;
    let value = (1.0 - (df - 1.0).powf(-2.0 / (df - 2.0))) / 2.0;
    let x = (df - 1.0).ln() / (df - 2.0);
    let out = BetaBracket {
        value,
        lower: x - 2.0 * x * x,
        upper: x,
    };
    assert!(out.lower <= out.value && out.value <= out.upper);
    Ok(out)
}

/// Per-vertex membership of a projected factor on a finite graph.
#[derive(Debug, Clone, PartialEq)]
pub struct IndependentSetSample {
    pub members: Vec<bool>,
    /// Vertices whose `(r+1)`-ball was not a tree and were set to 0.
    pub non_tree: usize,
}

impl IndependentSetSample {
    pub fn size(&self) -> usize {
        self.members.iter().filter(|&&b| b).count()
    }

    pub fn density(&self) -> f64 {
        self.size() as f64 / self.members.len().max(1) as f64
    }

    /// Number of host edges with both endpoints in the set.
    pub fn violations(&self, g: &MultiGraph) -> usize {
        g.violating_edges(&self.members)
    }
}

/// `I_G(v) = f(N_r(G, v))` when `N_{r+1}(G, v)` is a tree, else 0.
///
/// Panics if the result is not independent, which would mean the factor
/// itself is not an independent-set factor.
pub fn project_to_graph<L: Labelling + ?Sized>(
    f: &Factor,
    g: &MultiGraph,
    labels: &L,
) -> IndependentSetSample {
    let r = f.radius();
    let bits: Vec<(bool, bool)> = (0..g.n())
        .into_par_iter()
        .map(|v| {
            if is_tree_ball(g, v, r + 1) {
                let nb = neighborhood(g, v, r, labels);
                (true, f.rule.decide(&nb))
            } else {
                (false, false)
            }
        })
        .collect();
    let out = IndependentSetSample {
        non_tree: bits.iter().filter(|b| !b.0).count(),
        members: bits.into_iter().map(|b| b.1).collect(),
    };
    assert_eq!(
        out.violations(g),
        0,
        "projected factor produced adjacent members"
    );
    out
}

/// Host tree for density estimation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tree", rename_all = "kebab-case")]
pub enum TreeKind {
    Regular { d: usize },
    Pgw { lambda: f64 },
}

/// Monte Carlo estimate of `P[root in I]` over fresh trees and labels.
pub fn estimate_tree_density(f: &Factor, host: TreeKind, trials: u64, seed: u64) -> Estimate {
    let r = f.radius();
    run_trials(
        trials,
        Accumulator::default,
        |acc, t| {
            let s = derive(seed, tag::TRIAL, t);
            let tree = match host {
                TreeKind::Regular { d } => sample_regular_tree(d, r, s),
                TreeKind::Pgw { lambda } => sample_pgw_tree(lambda, r, s),
            };
            acc.push(f.rule.decide(&tree) as u8 as f64);
        },
        |a, b| a.merge(&b),
    )
    .estimate()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::RootedNeighborhood;
    use crate::rng::Label;

    fn star(root: f64, leaves: &[f64]) -> RootedNeighborhood {
        let lab = |x: f64| Label((x * 2f64.powi(64)) as u64);
        let mut labels = vec![lab(root)];
        labels.extend(leaves.iter().map(|&x| lab(x)));
        let edges = (1..=leaves.len() as u32).map(|i| [0, i]).collect();
        RootedNeighborhood::from_parts(0, 1, (0..=leaves.len() as u64).collect(), labels, edges)
            .unwrap()
    }

    #[test]
    fn threshold_examples() {
        let g = Factor::greedy_threshold();
        assert!(apply_factor(&g, &star(0.1, &[0.5, 0.9])).unwrap());
        assert!(!apply_factor(&g, &star(0.7, &[0.5, 0.9])).unwrap());
        assert!(!apply_factor(&Factor::zero(), &star(0.1, &[0.5])).unwrap());
    }

    #[test]
    fn radius_guard() {
        let lw = Factor::lauer_wormald(0.5, 2).unwrap();
        assert_eq!(
            apply_factor(&lw, &star(0.1, &[0.2])),
            Err(Error::RadiusTooSmall { have: 1, need: 3 })
        );
    }

    #[test]
    fn lw_parameter_checks() {
        assert!(Factor::lauer_wormald(0.0, 3).is_err());
        assert!(Factor::lauer_wormald(1.0, 3).is_err());
        assert!(Factor::lauer_wormald(0.5, 0).is_err());
        assert_eq!(Factor::lauer_wormald(0.5, 4).unwrap().radius(), 5);
    }

    #[test]
    fn lw_round_inversion() {
        let lw = LauerWormald::new(0.5, 3);
        assert_eq!(lw.round(0.0), 1);
        assert_eq!(lw.round(0.49), 1);
        assert_eq!(lw.round(0.5), 2);
        assert_eq!(lw.round(0.74), 2);
        assert_eq!(lw.round(0.8), 3);
        assert_eq!(lw.round(0.9), 4);
    }

    #[test]
    fn lw_single_round_cases() {
        // p = 1/2: labels below 1/2 succeed in round 1
        let f = Factor::lauer_wormald(0.5, 1).unwrap();
        let lone = star(0.1, &[0.6, 0.7, 0.9]);
        let nb = RootedNeighborhood::from_parts(
            0,
            2,
            lone.keys().to_vec(),
            lone.labels().to_vec(),
            lone.edges().to_vec(),
        )
        .unwrap();
        assert!(apply_factor(&f, &nb).unwrap());
        let clash = star(0.1, &[0.2, 0.7, 0.9]);
        let nb = RootedNeighborhood::from_parts(
            0,
            2,
            clash.keys().to_vec(),
            clash.labels().to_vec(),
            clash.edges().to_vec(),
        )
        .unwrap();
        assert!(!apply_factor(&f, &nb).unwrap());
    }

    #[test]
    fn beta_values() {
        assert!((beta_formula(3).unwrap().value - 0.375).abs() < 1e-15);
        assert!((beta_formula(4).unwrap().value - 1.0 / 3.0).abs() < 1e-15);
        assert!(beta_formula(2).is_err());
    }

    #[test]
    fn spec_round_trip() {
        for f in [
            Factor::zero(),
            Factor::greedy_threshold(),
            Factor::lauer_wormald(0.02, 250).unwrap(),
        ] {
            let back = Factor::from_str(&f.to_json()).unwrap();
            assert_eq!(back.spec(), f.spec());
            let short = Factor::from_str(&f.short_name()).unwrap();
            assert_eq!(short.spec(), f.spec());
        }
        let v: serde_json::Value =
            serde_json::from_str(&Factor::lauer_wormald(0.1, 3).unwrap().to_json()).unwrap();
        assert_eq!(v["kind"], "lauer-wormald");
        assert_eq!(v["radius"], 4);
        assert!(Factor::from_str("lw:x:3").is_err());
        assert!(Factor::from_str("nope").is_err());
    }

    #[test]
    fn zero_density_is_exact() {
        let e = estimate_tree_density(&Factor::zero(), TreeKind::Regular { d: 3 }, 100, 1);
        assert_eq!((e.mean, e.std_error), (0.0, 0.0));
    }
}
