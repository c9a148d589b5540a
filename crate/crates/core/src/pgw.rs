//! Moving a factor for the `d`-regular tree onto Poisson–Galton–Watson trees.
//!
//! The edge removal stage caps all degrees at `d`. The filling stage
//! attaches `(d-1)`-ary trees until every vertex has degree `d`, then
//! relabels. The inclusion stage runs the regular-tree factor and drops
//! every vertex that lost an edge. Everything is lazy: vertices are
//! generated only when a factor or a degree test looks at them.

use crate::error::{invalid, Result};
use crate::factor::{apply_factor, estimate_tree_density, Factor, TreeKind};
use crate::graph::{Forest, LazyTree, NodeId, Offspring, TreeView};
use crate::rng::{cmp_labels, derive, hash3, tag, LabelScheme, Labelling};
use crate::special::{poisson_cdf, poisson_pmf, poisson_upper_tail};
use crate::stats::{run_trials, Accumulator, Estimate};
use serde::{Deserialize, Serialize};
use std::cell::RefCell;
use std::collections::HashMap;

/// A forest with every degree capped at `d` by the marking rule: a vertex
/// of degree above `d` marks its `degree - d` neighbours of highest `X`
/// label (key breaks ties), and marked edges are removed.
pub struct Pruned<'a, F: Forest + ?Sized> {
    forest: &'a F,
    x: LabelScheme,
    d: usize,
    marked: RefCell<HashMap<NodeId, Vec<NodeId>>>,
}

impl<'a, F: Forest + ?Sized> Pruned<'a, F> {
    pub fn new(forest: &'a F, x: LabelScheme, d: usize) -> Self {
        Self {
            forest,
            x,
            d,
            marked: RefCell::new(HashMap::new()),
        }
    }

    pub fn forest(&self) -> &'a F {
        self.forest
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Neighbours `v` marks for removal.
    pub fn marked_by(&self, v: NodeId) -> Vec<NodeId> {
        if let Some(m) = self.marked.borrow().get(&v) {
            return m.clone();
        }
        let excess = self.forest.degree(v).saturating_sub(self.d);
        let mut out = Vec::new();
        if excess > 0 {
            let mut nbrs = self.forest.neighbors(v);
            let f = self.forest;
            nbrs.sort_by(|&a, &b| {
                cmp_labels(
                    (self.x.label(f.key(b)), f.key(b)),
                    (self.x.label(f.key(a)), f.key(a)),
                )
            });
            out = nbrs[..excess].to_vec();
        }
        self.marked.borrow_mut().insert(v, out.clone());
        out
    }

    /// Whether the edge between adjacent `u` and `v` was removed.
    pub fn is_removed(&self, u: NodeId, v: NodeId) -> bool {
        self.marked_by(u).contains(&v) || self.marked_by(v).contains(&u)
    }

    pub fn kept_neighbors(&self, v: NodeId) -> Vec<NodeId> {
        self.forest
            .neighbors(v)
            .into_iter()
            .filter(|&u| !self.is_removed(v, u))
            .collect()
    }

    pub fn kept_degree(&self, v: NodeId) -> usize {
        self.kept_neighbors(v).len()
    }

    /// Number of removed edges at `v`.
    pub fn removed_at(&self, v: NodeId) -> usize {
        self.forest.degree(v) - self.kept_degree(v)
    }

    /// Removed edges `(parent, child)` with the child within `depth` of
    /// `root`.
    pub fn removed_edges(&self, root: NodeId, depth: usize) -> Vec<(NodeId, NodeId)> {
        let mut out = Vec::new();
        let mut layer = vec![root];
        for _ in 0..depth {
            let mut next = Vec::new();
            for &v in &layer {
                for c in self.forest.children(v) {
                    if self.is_removed(v, c) {
                        out.push((v, c));
                    }
                    next.push(c);
                }
            }
            layer = next;
        }
        out
    }
}

#[derive(Debug, Clone)]
struct Filler {
    parent: NodeId,
    key: u64,
    first_child: Option<usize>,
}

/// The pruned forest with `d - degree` pendant `(d-1)`-ary trees attached
/// at every original vertex, one edge per tree.
///
/// Original vertex `v` has id `2v`; attached vertices have odd ids. The
/// attached trees are keyed by hashing from their attachment point, so the
/// result does not depend on exploration order.
pub struct FilledForest<'a, F: Forest + ?Sized> {
    pruned: &'a Pruned<'a, F>,
    seed: u64,
    fillers: RefCell<Vec<Filler>>,
    attached: RefCell<HashMap<NodeId, (usize, usize)>>,
}

impl<'a, F: Forest + ?Sized> FilledForest<'a, F> {
    pub fn new(pruned: &'a Pruned<'a, F>, seed: u64) -> Self {
        Self {
            pruned,
            seed,
            fillers: RefCell::new(Vec::new()),
            attached: RefCell::new(HashMap::new()),
        }
    }

    /// Id of original vertex `v`.
    pub fn lift(v: NodeId) -> NodeId {
        2 * v
    }

    /// Original vertex behind `id`, if it is not an attached vertex.
    pub fn original(id: NodeId) -> Option<NodeId> {
        (id % 2 == 0).then_some(id / 2)
    }

    /// Attached vertices generated so far.
    pub fn filler_count(&self) -> usize {
        self.fillers.borrow().len()
    }

    fn push_fillers(&self, parent: NodeId, parent_key: u64, count: usize) -> usize {
        let mut fillers = self.fillers.borrow_mut();
        let first = fillers.len();
        for i in 0..count {
            fillers.push(Filler {
                parent,
                key: hash3(self.seed, parent_key, i as u64),
                first_child: None,
            });
        }
        first
    }
}

impl<F: Forest + ?Sized> Forest for FilledForest<'_, F> {
    fn parent(&self, id: NodeId) -> Option<NodeId> {
        match Self::original(id) {
            Some(v) => {
                let p = self.pruned.forest.parent(v)?;
                (!self.pruned.is_removed(p, v)).then_some(2 * p)
            }
            None => Some(self.fillers.borrow()[id / 2].parent),
        }
    }

    fn children(&self, id: NodeId) -> Vec<NodeId> {
        let d = self.pruned.d;
        match Self::original(id) {
            Some(v) => {
                let f = self.pruned.forest;
                let mut out: Vec<NodeId> = f
                    .children(v)
                    .into_iter()
                    .filter(|&c| !self.pruned.is_removed(v, c))
                    .map(|c| 2 * c)
                    .collect();
                let cached = self.attached.borrow().get(&v).copied();
                let (first, count) = match cached {
                    Some(x) => x,
                    None => {
                        let count = d - self.pruned.kept_degree(v);
                        let first = self.push_fillers(id, f.key(v), count);
                        self.attached.borrow_mut().insert(v, (first, count));
                        (first, count)
                    }
                };
                out.extend((first..first + count).map(|i| 2 * i + 1));
                out
            }
            None => {
                let i = id / 2;
                let (first_child, key) = {
                    let fl = self.fillers.borrow();
                    (fl[i].first_child, fl[i].key)
                };
                let first = match first_child {
                    Some(c) => c,
                    None => {
                        let c = self.push_fillers(id, key, d - 1);
                        self.fillers.borrow_mut()[i].first_child = Some(c);
                        c
                    }
                };
                (first..first + d - 1).map(|j| 2 * j + 1).collect()
            }
        }
    }

    fn key(&self, id: NodeId) -> u64 {
        match Self::original(id) {
            Some(v) => self.pruned.forest.key(v),
            None => self.fillers.borrow()[id / 2].key,
        }
    }
}

/// Membership of one original vertex in `I'` and `J`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Inclusion {
    pub i_prime: bool,
    pub j: bool,
}

/// Runs the regular-tree factor at original vertex `v` of the filled
/// forest under labels `y`; `J` keeps `v` only if none of its edges were
/// removed.
pub fn inclusion_stage<F: Forest + ?Sized>(
    f: &Factor,
    filled: &FilledForest<'_, F>,
    y: &LabelScheme,
    v: NodeId,
) -> Inclusion {
    let view = TreeView::new(filled, y, FilledForest::<F>::lift(v), f.radius());
    let i_prime = apply_factor(f, &view).expect("view has the factor radius");
    Inclusion {
        i_prime,
        j: i_prime && filled.pruned.removed_at(v) == 0,
    }
}

/// Whether the root of `tree` and all its neighbours have degree at most
/// `d`.
pub fn event_e_holds<F: Forest + ?Sized>(tree: &F, root: NodeId, d: usize) -> bool {
    tree.degree(root) <= d && tree.neighbors(root).iter().all(|&u| tree.degree(u) <= d)
}

/// One PGW trial of the three-stage construction: the original tree, the
/// removal labels `X`, the inclusion labels `Y` and the filler seed.
#[derive(Debug)]
pub struct TransferTrace {
    pub tree: LazyTree,
    pub x: LabelScheme,
    pub y: LabelScheme,
    pub fill_seed: u64,
    pub d: usize,
}

/// What one trial observed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub root: Inclusion,
    pub removed_at_root: usize,
    pub event_e: bool,
    /// Kept degree of the root.
    pub max_kept_degree: usize,
    /// Edges at the root with both ends in `J`; always 0.
    pub j_violations: usize,
}

impl TransferTrace {
    pub fn sample(lambda: f64, d: usize, seed: u64) -> Self {
        Self {
            tree: LazyTree::new(Offspring::Poisson { lambda }, derive(seed, tag::STRUCTURE, 0)),
            x: LabelScheme::iid(derive(seed, tag::LABEL, 0)),
            y: LabelScheme::iid(derive(seed, tag::LABEL, 1)),
            fill_seed: derive(seed, tag::STRUCTURE, 1),
            d,
        }
    }

    /// Runs all three stages and checks `J` on every original edge at the
    /// root.
    pub fn run(&self, f: &Factor) -> TrialOutcome {
        let pruned = Pruned::new(&self.tree, self.x, self.d);
        let filled = FilledForest::new(&pruned, self.fill_seed);
        let root = self.tree.root();
        let at_root = inclusion_stage(f, &filled, &self.y, root);
        let nbrs = self.tree.neighbors(root);
        let mut j_violations = 0;
        if at_root.j {
            for &u in &nbrs {
                if inclusion_stage(f, &filled, &self.y, u).j {
                    j_violations += 1;
                }
            }
        }
        let max_kept_degree = pruned.kept_degree(root);
        TrialOutcome {
            root: at_root,
            removed_at_root: pruned.removed_at(root),
            event_e: event_e_holds(&self.tree, root, self.d),
            max_kept_degree,
            j_violations,
        }
    }
}

/// `P(E(lambda, d))`: the root has `j <= d` children, each with at most
/// `d - 1` children of its own.
pub fn event_e_exact(lambda: f64, d: usize) -> Result<f64> {
    if !(lambda > 0.0) || d == 0 {
        return Err(invalid("event E needs lambda > 0 and d >= 1"));
    }
    let f = poisson_cdf(lambda, d as u64 - 1);
    Ok((0..=d as u64)
        .map(|j| poisson_pmf(lambda, j) * f.powi(j as i32))
        .sum())
}

/// Monte Carlo `P(E(lambda, d))` over fresh PGW trees.
pub fn event_e_mc(lambda: f64, d: usize, trials: u64, seed: u64) -> Result<Estimate> {
    if !(lambda > 0.0) || d == 0 || trials == 0 {
        return Err(invalid("event E needs lambda > 0, d >= 1 and trials >= 1"));
    }
    Ok(run_trials(
        trials,
        Accumulator::default,
        |acc, t| {
            let s = derive(seed, tag::TRIAL, t);
            let tree = LazyTree::new(Offspring::Poisson { lambda }, derive(s, tag::STRUCTURE, 0));
            acc.push(event_e_holds(&tree, tree.root(), d) as u8 as f64);
        },
        |a, b| a.merge(&b),
    )
    .estimate())
}

/// `e^{-lambda p} - p` with `p = P(Poisson(lambda) > d - 1)`: a lower bound
/// on `P(E(lambda, d))`.
pub fn event_e_lower_bound(lambda: f64, d: usize) -> Result<f64> {
    if !(lambda > 0.0) || d == 0 {
        return Err(invalid("event E needs lambda > 0 and d >= 1"));
    }
    let p = poisson_upper_tail(lambda, d as u64 - 1);
    Ok((-lambda * p).exp() - p)
}

/// Chernoff bound `e^{d - lambda} (lambda/d)^d` on `P(Poisson(lambda) > d)`.
pub fn poisson_tail_bound(lambda: f64, d: usize) -> Result<f64> {
    let df = d as f64;
    if !(lambda >= 0.0) || lambda >= df {
        return Err(invalid(format!(
            "the tail bound needs 0 <= lambda < d, got lambda = {lambda}, d = {d}"
        )));
    }
    if lambda == 0.0 {
        return Ok(0.0);
    }
    Ok((df - lambda + df * (lambda / df).ln()).exp())
}

fn check_u(u: f64) -> Result<()> {
    if u > 0.5 && u < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("schedule exponent u = {u} outside (1/2, 1)")))
    }
}

/// `e^{-d^{2u-1}/2}`, the tail bound when `lambda = d - d^u`.
pub fn schedule_tail_bound(u: f64, d: usize) -> Result<f64> {
    check_u(u)?;
    Ok((-(d as f64).powf(2.0 * u - 1.0) / 2.0).exp())
}

/// `ceil(lambda + lambda^u)`.
pub fn schedule_degree(lambda: f64, u: f64) -> Result<usize> {
    check_u(u)?;
    if !(lambda > 0.0) {
        return Err(invalid("lambda must be positive"));
    }
    Ok((lambda + lambda.powf(u)).ceil() as usize)
}

/// Density of `J` against the bracket `[density(I) P(E), density(I)]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferReport {
    pub lambda: f64,
    pub d: usize,
    pub trials: u64,
    pub density_j: Estimate,
    /// Density of the factor on the `d`-regular tree, from an independent
    /// run.
    pub density_i: Estimate,
    /// Density of `I'` at the PGW root; equal in law to `density_i`.
    pub density_i_prime: Estimate,
    pub p_e_exact: f64,
    pub p_e_mc: Estimate,
    pub p_e_lower_bound: f64,
    pub lower: f64,
    pub lower_std_error: f64,
    pub upper: f64,
    pub sandwich_ok: bool,
    pub p_e_agree: bool,
    pub max_kept_degree: usize,
    pub j_violations: u64,
}

#[derive(Default)]
struct TransferState {
    j: Accumulator,
    i_prime: Accumulator,
    e: Accumulator,
    max_kept_degree: usize,
    j_violations: u64,
}

/// Monte Carlo density of `J` at the root of fresh PGW trees with the
/// sandwich check at three standard errors.
pub fn transfer_density(
    f: &Factor,
    lambda: f64,
    d: usize,
    trials: u64,
    seed: u64,
) -> Result<TransferReport> {
    if !(lambda > 0.0) || d < 2 || trials == 0 {
        return Err(invalid("transfer needs lambda > 0, d >= 2 and trials >= 1"));
    }
    let st = run_trials(
        trials,
        TransferState::default,
        |st, t| {
            let trace = TransferTrace::sample(lambda, d, derive(seed, tag::TRIAL, t));
            let out = trace.run(f);
            st.j.push(out.root.j as u8 as f64);
            st.i_prime.push(out.root.i_prime as u8 as f64);
            st.e.push(out.event_e as u8 as f64);
            st.max_kept_degree = st.max_kept_degree.max(out.max_kept_degree);
            st.j_violations += out.j_violations as u64;
        },
        |a, b| {
            a.j.merge(&b.j);
            a.i_prime.merge(&b.i_prime);
            a.e.merge(&b.e);
            a.max_kept_degree = a.max_kept_degree.max(b.max_kept_degree);
            a.j_violations += b.j_violations;
        },
    );
    let density_i = estimate_tree_density(f, TreeKind::Regular { d }, trials, derive(seed, tag::COPY, 0));
    let density_j = st.j.estimate();
    let p_e_mc = st.e.estimate();
    let p_e_exact = event_e_exact(lambda, d)?;
    let lower = density_i.mean * p_e_mc.mean;
    let lower_std_error =
        (density_i.std_error * p_e_mc.mean).hypot(density_i.mean * p_e_mc.std_error);
    let upper = density_i.mean;
    let sigma_lo = density_j.std_error.hypot(lower_std_error);
    let sigma_hi = density_j.std_error.hypot(density_i.std_error);
    Ok(TransferReport {
        lambda,
        d,
        trials,
        sandwich_ok: lower - 3.0 * sigma_lo <= density_j.mean
            && density_j.mean <= upper + 3.0 * sigma_hi,
        p_e_agree: p_e_mc.within(p_e_exact, 3.0),
        density_j,
        density_i,
        density_i_prime: st.i_prime.estimate(),
        p_e_exact,
        p_e_mc,
        p_e_lower_bound: event_e_lower_bound(lambda, d)?,
        lower,
        lower_std_error,
        upper,
        max_kept_degree: st.max_kept_degree,
        j_violations: st.j_violations,
    })
}
