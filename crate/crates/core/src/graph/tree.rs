use super::neighborhood::{Neighborhood, RootedNeighborhood};
use crate::rng::{derive, hash2, hash3, poisson_from_bits, tag, Label, LabelScheme, Labelling};
use std::cell::RefCell;
use std::collections::HashMap;

pub type NodeId = usize;

/// A rooted forest whose vertices can be discovered on demand.
pub trait Forest {
    fn parent(&self, v: NodeId) -> Option<NodeId>;
    /// Children of `v`, generating them if necessary.
    fn children(&self, v: NodeId) -> Vec<NodeId>;
    /// Identity used for labels and tie-breaking; unique within the forest.
    fn key(&self, v: NodeId) -> u64;

    fn neighbors(&self, v: NodeId) -> Vec<NodeId> {
        let mut out: Vec<NodeId> = self.parent(v).into_iter().collect();
        out.extend(self.children(v));
        out
    }

    /// Degree of `v`; implementations may answer without generating
    /// children.
    fn degree(&self, v: NodeId) -> usize {
        self.neighbors(v).len()
    }
}

/// Offspring law of a lazily generated tree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Offspring {
    /// Root has `d` children, every other vertex `d - 1`: the regular tree.
    Regular { d: usize },
    /// Every vertex has `m` children.
    Ary { m: usize },
    /// i.i.d. Poisson offspring: the Poisson–Galton–Watson tree.
    Poisson { lambda: f64 },
}

const NONE: u32 = u32::MAX;

#[derive(Debug, Clone)]
struct Node {
    parent: u32,
    depth: u32,
    key: u64,
    first_child: u32,
}

/// An infinite random tree materialised only where it is looked at.
///
/// Vertex keys are hashes of the path from the root, and offspring counts
/// are hashes of the key, so the tree is a pure function of its seed no
/// matter in which order it is explored.
#[derive(Debug)]
pub struct LazyTree {
    shape: Offspring,
    seed: u64,
    nodes: RefCell<Vec<Node>>,
}

impl LazyTree {
    pub fn new(shape: Offspring, seed: u64) -> Self {
        let root = Node {
            parent: NONE,
            depth: 0,
            key: hash2(seed, tag::ROOT),
            first_child: NONE,
        };
        Self {
            shape,
            seed,
            nodes: RefCell::new(vec![root]),
        }
    }

    pub fn shape(&self) -> Offspring {
        self.shape
    }

    pub fn root(&self) -> NodeId {
        0
    }

    pub fn depth(&self, v: NodeId) -> usize {
        self.nodes.borrow()[v].depth as usize
    }

    /// Number of children of `v`, known without generating them.
    pub fn offspring(&self, v: NodeId) -> usize {
        let (depth, key) = {
            let nodes = self.nodes.borrow();
            (nodes[v].depth, nodes[v].key)
        };
        match self.shape {
            Offspring::Regular { d } => {
                if depth == 0 {
                    d
                } else {
                    d - 1
                }
            }
            Offspring::Ary { m } => m,
            Offspring::Poisson { lambda } => {
                poisson_from_bits(lambda, hash3(self.seed, tag::OFFSPRING, key)) as usize
            }
        }
    }

    /// Degree in the infinite tree.
    pub fn degree(&self, v: NodeId) -> usize {
        self.offspring(v) + usize::from(v != 0)
    }

    /// Number of vertices generated so far.
    pub fn generated(&self) -> usize {
        self.nodes.borrow().len()
    }
}

impl Forest for LazyTree {
    fn parent(&self, v: NodeId) -> Option<NodeId> {
        let p = self.nodes.borrow()[v].parent;
        (p != NONE).then_some(p as usize)
    }

    fn children(&self, v: NodeId) -> Vec<NodeId> {
        let count = self.offspring(v);
        let mut nodes = self.nodes.borrow_mut();
        if nodes[v].first_child == NONE {
            let first = nodes.len() as u32;
            let (depth, key) = (nodes[v].depth, nodes[v].key);
            nodes[v].first_child = first;
            for i in 0..count {
                nodes.push(Node {
                    parent: v as u32,
                    depth: depth + 1,
                    key: hash3(self.seed, key, i as u64),
                    first_child: NONE,
                });
            }
        }
        let first = nodes[v].first_child as usize;
        (first..first + count).collect()
    }

    fn key(&self, v: NodeId) -> u64 {
        self.nodes.borrow()[v].key
    }

    fn degree(&self, v: NodeId) -> usize {
        LazyTree::degree(self, v)
    }
}

/// A labelled view of a forest as a neighbourhood of radius `radius`
/// around `root`.
///
/// Distances are discovered as the factor walks outward: a neighbour first
/// seen from `v` sits one step further than `v`. Since the forest is
/// acyclic this is the graph distance.
pub struct TreeView<'a, F: Forest + ?Sized, L: Labelling + ?Sized> {
    forest: &'a F,
    labels: &'a L,
    root: NodeId,
    radius: usize,
    /// vertex -> (distance, vertex it was reached from)
    seen: RefCell<HashMap<NodeId, (usize, Option<NodeId>)>>,
}

impl<'a, F: Forest + ?Sized, L: Labelling + ?Sized> TreeView<'a, F, L> {
    pub fn new(forest: &'a F, labels: &'a L, root: NodeId, radius: usize) -> Self {
        Self {
            forest,
            labels,
            root,
            radius,
            seen: RefCell::new(HashMap::from([(root, (0, None))])),
        }
    }
}

impl<F: Forest + ?Sized, L: Labelling + ?Sized> Neighborhood for TreeView<'_, F, L> {
    fn root(&self) -> usize {
        self.root
    }

    fn radius(&self) -> usize {
        self.radius
    }

    fn neighbors(&self, v: usize) -> Vec<usize> {
        let (dv, via) = *self
            .seen
            .borrow()
            .get(&v)
            .expect("neighbours requested for an undiscovered vertex");
        if dv == self.radius {
            return via.into_iter().collect();
        }
        let out = self.forest.neighbors(v);
        let mut seen = self.seen.borrow_mut();
        for &w in &out {
            if Some(w) != via {
                seen.entry(w).or_insert((dv + 1, Some(v)));
            }
        }
        out
    }

    fn label(&self, v: usize) -> Label {
        self.labels.label(self.forest.key(v))
    }

    fn key(&self, v: usize) -> u64 {
        self.forest.key(v)
    }

    fn distance(&self, v: usize) -> usize {
        self.seen.borrow()[&v].0
    }
}

/// A random tree cut at depth `radius`, with labels. Depth-`radius`
/// vertices are the boundary: their offspring counts are defined but their
/// children are never exposed.
#[derive(Debug)]
pub struct TruncatedTree {
    tree: LazyTree,
    labels: LabelScheme,
    radius: usize,
}

impl TruncatedTree {
    pub fn new(tree: LazyTree, labels: LabelScheme, radius: usize) -> Self {
        Self {
            tree,
            labels,
            radius,
        }
    }

    pub fn tree(&self) -> &LazyTree {
        &self.tree
    }

    pub fn labels(&self) -> &LabelScheme {
        &self.labels
    }

    pub fn child_count(&self, v: NodeId) -> usize {
        self.tree.offspring(v)
    }

    pub fn is_boundary(&self, v: NodeId) -> bool {
        self.tree.depth(v) == self.radius
    }

    /// All vertices of the truncated tree in BFS order.
    pub fn vertices(&self) -> Vec<NodeId> {
        let mut order = vec![0];
        let mut head = 0;
        while head < order.len() {
            let v = order[head];
            head += 1;
            if !self.is_boundary(v) {
                order.extend(self.tree.children(v));
            }
        }
        order
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices().len()
    }

    /// The explicit ball, with BFS-canonical ids.
    pub fn to_neighborhood(&self) -> RootedNeighborhood {
        let order = self.vertices();
        let index: HashMap<NodeId, u32> = order
            .iter()
            .enumerate()
            .map(|(i, &v)| (v, i as u32))
            .collect();
        let edges = order[1..]
            .iter()
            .map(|&v| [index[&self.tree.parent(v).unwrap()], index[&v]])
            .collect();
        let keys: Vec<u64> = order.iter().map(|&v| self.tree.key(v)).collect();
        let labels = keys.iter().map(|&k| self.labels.label(k)).collect();
        RootedNeighborhood::from_parts(0, self.radius, keys, labels, edges)
            .expect("tree ball is within its radius")
    }
}

impl Neighborhood for TruncatedTree {
    fn root(&self) -> usize {
        0
    }
    fn radius(&self) -> usize {
        self.radius
    }
    fn neighbors(&self, v: usize) -> Vec<usize> {
        if self.is_boundary(v) {
            self.tree.parent(v).into_iter().collect()
        } else {
            self.tree.neighbors(v)
        }
    }
    fn label(&self, v: usize) -> Label {
        self.labels.label(self.tree.key(v))
    }
    fn key(&self, v: usize) -> u64 {
        self.tree.key(v)
    }
    fn distance(&self, v: usize) -> usize {
        self.tree.depth(v)
    }
}

/// `PGW(lambda)` cut at depth `r`, with fresh labels.
pub fn sample_pgw_tree(lambda: f64, r: usize, seed: u64) -> TruncatedTree {
    let tree = LazyTree::new(Offspring::Poisson { lambda }, derive(seed, tag::STRUCTURE, 0));
    TruncatedTree::new(tree, LabelScheme::iid(derive(seed, tag::LABEL, 0)), r)
}

/// `T_{d,r}` with fresh labels.
pub fn sample_regular_tree(d: usize, r: usize, seed: u64) -> TruncatedTree {
    let tree = LazyTree::new(Offspring::Regular { d }, derive(seed, tag::STRUCTURE, 0));
    TruncatedTree::new(tree, LabelScheme::iid(derive(seed, tag::LABEL, 0)), r)
}
