use super::MultiGraph;
use crate::error::{invalid, Result};
use crate::rng::{Label, Labelling};
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet, VecDeque};

/// Read access to a rooted, labelled graph of bounded radius.
///
/// This is the only view a factor gets of its input. Implementations range
/// from explicit finite balls to lazily generated infinite trees; callers
/// must only ask for neighbours of vertices they reached from the root.
pub trait Neighborhood {
    fn root(&self) -> usize;
    fn radius(&self) -> usize;
    /// Neighbours of `v` within the radius, with multiplicity (a loop lists
    /// `v` twice, a double edge lists the endpoint twice).
    fn neighbors(&self, v: usize) -> Vec<usize>;
    fn label(&self, v: usize) -> Label;
    /// Stable identity used to break label ties.
    fn key(&self, v: usize) -> u64;
    /// Graph distance from the root.
    fn distance(&self, v: usize) -> usize;
}

impl<N: Neighborhood + ?Sized> Neighborhood for &N {
    fn root(&self) -> usize {
        (**self).root()
    }
    fn radius(&self) -> usize {
        (**self).radius()
    }
    fn neighbors(&self, v: usize) -> Vec<usize> {
        (**self).neighbors(v)
    }
    fn label(&self, v: usize) -> Label {
        (**self).label(v)
    }
    fn key(&self, v: usize) -> u64 {
        (**self).key(v)
    }
    fn distance(&self, v: usize) -> usize {
        (**self).distance(v)
    }
}

/// Restriction of a neighbourhood to a smaller radius.
pub struct Truncated<'a> {
    inner: &'a dyn Neighborhood,
    radius: usize,
}

impl<'a> Truncated<'a> {
    pub fn new(inner: &'a dyn Neighborhood, radius: usize) -> Self {
        Self {
            inner,
            radius: radius.min(inner.radius()),
        }
    }
}

impl Neighborhood for Truncated<'_> {
    fn root(&self) -> usize {
        self.inner.root()
    }
    fn radius(&self) -> usize {
        self.radius
    }
    fn neighbors(&self, v: usize) -> Vec<usize> {
        let mut out = self.inner.neighbors(v);
        out.retain(|&w| self.inner.distance(w) <= self.radius);
        out
    }
    fn label(&self, v: usize) -> Label {
        self.inner.label(v)
    }
    fn key(&self, v: usize) -> u64 {
        self.inner.key(v)
    }
    fn distance(&self, v: usize) -> usize {
        self.inner.distance(v)
    }
}

/// An explicit finite ball: the induced subgraph on all vertices within
/// `radius` of `root`, with labels attached.
///
/// Local ids produced by [`neighborhood`] follow BFS order from the root
/// with sorted adjacency, so the root is `0` and serialization is stable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootedNeighborhood {
    root: usize,
    radius: usize,
    /// Identity of each local vertex in the host.
    keys: Vec<u64>,
    labels: Vec<Label>,
    edges: Vec<[u32; 2]>,
    #[serde(skip)]
    dist: Vec<u32>,
    #[serde(skip)]
    adjacency: Vec<Vec<u32>>,
}

impl RootedNeighborhood {
    /// Builds a ball from explicit parts; distances are recomputed and every
    /// vertex must lie within `radius` of `root`.
    pub fn from_parts(
        root: usize,
        radius: usize,
        keys: Vec<u64>,
        labels: Vec<Label>,
        edges: Vec<[u32; 2]>,
    ) -> Result<Self> {
        let n = keys.len();
        if labels.len() != n || root >= n {
            return Err(invalid("neighbourhood parts have inconsistent sizes"));
        }
        let mut adjacency = vec![Vec::new(); n];
        for &[u, v] in &edges {
            if u as usize >= n || v as usize >= n {
                return Err(invalid("neighbourhood edge out of range"));
            }
            adjacency[u as usize].push(v);
            adjacency[v as usize].push(u);
        }
        let mut dist = vec![u32::MAX; n];
        dist[root] = 0;
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            for &w in &adjacency[u] {
                if dist[w as usize] == u32::MAX {
                    dist[w as usize] = dist[u] + 1;
                    queue.push_back(w as usize);
                }
            }
        }
        if dist.iter().any(|&x| x as usize > radius) {
            return Err(invalid("neighbourhood vertex beyond radius or disconnected"));
        }
        Ok(Self {
            root,
            radius,
            keys,
            labels,
            edges,
            dist,
            adjacency,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.keys.len()
    }

    pub fn edges(&self) -> &[[u32; 2]] {
        &self.edges
    }

    pub fn keys(&self) -> &[u64] {
        &self.keys
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    /// True when the ball has no cycle, loop or multi-edge.
    pub fn is_tree(&self) -> bool {
        self.edges.len() + 1 == self.keys.len()
    }

    /// Relabels local ids: vertex `v` becomes `perm[v]`. Structure, keys and
    /// labels travel with the vertices.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.vertex_count();
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true)) {
            return Err(invalid("not a permutation of the local ids"));
        }
        let mut keys = vec![0; n];
        let mut labels = vec![Label(0); n];
        for v in 0..n {
            keys[perm[v]] = self.keys[v];
            labels[perm[v]] = self.labels[v];
        }
        let edges = self
            .edges
            .iter()
            .map(|&[u, v]| [perm[u as usize] as u32, perm[v as usize] as u32])
            .collect();
        Self::from_parts(perm[self.root], self.radius, keys, labels, edges)
    }

    /// Replaces the label of local vertex `v`.
    pub fn with_label(&self, v: usize, label: Label) -> Self {
        let mut out = self.clone();
        out.labels[v] = label;
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("neighbourhood serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: RootedNeighborhood =
            serde_json::from_str(s).map_err(|e| invalid(format!("neighbourhood json: {e}")))?;
        Self::from_parts(raw.root, raw.radius, raw.keys, raw.labels, raw.edges)
    }
}

impl Neighborhood for RootedNeighborhood {
    fn root(&self) -> usize {
        self.root
    }
    fn radius(&self) -> usize {
        self.radius
    }
    fn neighbors(&self, v: usize) -> Vec<usize> {
        self.adjacency[v].iter().map(|&w| w as usize).collect()
    }
    fn label(&self, v: usize) -> Label {
        self.labels[v]
    }
    fn key(&self, v: usize) -> u64 {
        self.keys[v]
    }
    fn distance(&self, v: usize) -> usize {
        self.dist[v] as usize
    }
}

/// The ball of radius `r` around `v` in `g`, with `labels` indexed by host
/// vertex id.
pub fn neighborhood<L: Labelling + ?Sized>(
    g: &MultiGraph,
    v: usize,
    r: usize,
    labels: &L,
) -> RootedNeighborhood {
    let mut local: HashMap<u32, u32> = HashMap::from([(v as u32, 0)]);
    let mut order = vec![v as u32];
    let mut dist = vec![0u32];
    let mut head = 0;
    while head < order.len() {
        let u = order[head];
        let du = dist[head];
        head += 1;
        if du as usize == r {
            continue;
        }
        for inc in g.incidences(u as usize) {
            if let std::collections::hash_map::Entry::Vacant(slot) = local.entry(inc.neighbor) {
                slot.insert(order.len() as u32);
                order.push(inc.neighbor);
                dist.push(du + 1);
            }
        }
    }
    let mut taken: HashSet<u32> = HashSet::new();
    let mut edges = Vec::new();
    let mut adjacency = vec![Vec::new(); order.len()];
    for (lu, &u) in order.iter().enumerate() {
        for inc in g.incidences(u as usize) {
            if let Some(&lw) = local.get(&inc.neighbor) {
                if taken.insert(inc.edge) {
                    edges.push([lu as u32, lw]);
                    adjacency[lu].push(lw);
                    adjacency[lw as usize].push(lu as u32);
                }
            }
        }
    }
    RootedNeighborhood {
        root: 0,
        radius: r,
        keys: order.iter().map(|&u| u as u64).collect(),
        labels: order.iter().map(|&u| labels.label(u as u64)).collect(),
        edges,
        dist,
        adjacency,
    }
}

/// Whether the ball of the given radius around `v` is a tree (no cycle,
/// loop or multi-edge among its vertices). Stops at the first closing edge.
pub fn is_tree_ball(g: &MultiGraph, v: usize, radius: usize) -> bool {
    // vertex -> (distance, edge it was discovered through)
    let mut seen: HashMap<u32, (u32, u32)> = HashMap::from([(v as u32, (0, u32::MAX))]);
    let mut queue = VecDeque::from([v as u32]);
    while let Some(u) = queue.pop_front() {
        let (du, via) = seen[&u];
        for inc in g.incidences(u as usize) {
            if inc.edge == via {
                continue;
            }
            match seen.get(&inc.neighbor) {
                Some(_) => return false,
                None if (du as usize) < radius => {
                    seen.insert(inc.neighbor, (du + 1, inc.edge));
                    queue.push_back(inc.neighbor);
                }
                None => {}
            }
        }
    }
    true
}

/// Number of vertices whose `(r+1)`-ball is not a tree.
pub fn count_non_tree_vertices(g: &MultiGraph, r: usize) -> usize {
    use rayon::prelude::*;
    (0..g.n())
        .into_par_iter()
        .filter(|&v| !is_tree_ball(g, v, r + 1))
        .count()
}
