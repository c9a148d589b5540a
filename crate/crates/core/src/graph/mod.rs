//! Random structures: configuration-model multigraphs, Erdős–Rényi graphs,
//! regular and Poisson–Galton–Watson trees, and rooted neighbourhoods.

mod neighborhood;
mod sample;
mod tree;

pub use neighborhood::{
    count_non_tree_vertices, is_tree_ball, neighborhood, Neighborhood, RootedNeighborhood,
    Truncated,
};
pub use sample::{
    config_graph_from_pairing, er_resample, sample_config_model, sample_er, sample_pairing,
};
pub use tree::{
    sample_pgw_tree, sample_regular_tree, Forest, LazyTree, NodeId, Offspring, TreeView,
    TruncatedTree,
};

use crate::error::{invalid, Result};
use serde::{Deserialize, Serialize};

/// How a graph was produced; recorded in the serialized form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", content = "params", rename_all = "lowercase")]
pub enum Model {
    /// Uniform pairing of `n * d` half-edges.
    Config { d: usize },
    /// Each pair present independently with probability `lambda / n`.
    Er { lambda: f64 },
    /// Built by hand.
    Explicit,
}

/// One end of an edge as seen from a vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Incidence {
    pub neighbor: u32,
    pub edge: u32,
}

/// A multigraph with stable edge identifiers.
///
/// A loop at `v` appears twice in `v`'s incidence list, so every vertex of a
/// configuration-model sample has exactly `d` incidences.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiGraph {
    n: usize,
    model: Model,
    edges: Vec<[u32; 2]>,
    adjacency: Vec<Vec<Incidence>>,
}

impl MultiGraph {
    pub fn from_edges(n: usize, edges: Vec<[u32; 2]>, model: Model) -> Result<Self> {
        let mut adjacency = vec![Vec::new(); n];
        for (id, &[u, v]) in edges.iter().enumerate() {
            if u as usize >= n || v as usize >= n {
                return Err(invalid(format!("edge ({u},{v}) out of range for n={n}")));
            }
            adjacency[u as usize].push(Incidence {
                neighbor: v,
                edge: id as u32,
            });
            adjacency[v as usize].push(Incidence {
                neighbor: u,
                edge: id as u32,
            });
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(Self {
            n,
            model,
            edges,
            adjacency,
        })
    }

    /// The cycle `0 - 1 - ... - (n-1) - 0`.
    pub fn cycle(n: usize) -> Self {
        let edges = (0..n as u32).map(|i| [i, (i + 1) % n as u32]).collect();
        Self::from_edges(n, edges, Model::Explicit).expect("cycle edges in range")
    }

    pub fn path(n: usize) -> Self {
        let edges = (1..n as u32).map(|i| [i - 1, i]).collect();
        Self::from_edges(n, edges, Model::Explicit).expect("path edges in range")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn model(&self) -> Model {
        self.model
    }

    pub fn edges(&self) -> &[[u32; 2]] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn incidences(&self, v: usize) -> &[Incidence] {
        &self.adjacency[v]
    }

    /// Number of incident half-edges (a loop counts twice).
    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn has_loops(&self) -> bool {
        self.edges.iter().any(|e| e[0] == e[1])
    }

    pub fn has_multi_edges(&self) -> bool {
        let mut seen: Vec<(u32, u32)> = self
            .edges
            .iter()
            .map(|&[u, v]| (u.min(v), u.max(v)))
            .collect();
        seen.sort_unstable();
        seen.windows(2).any(|w| w[0] == w[1])
    }

    /// Number of edges with both endpoints in `members` (loops included).
    pub fn violating_edges(&self, members: &[bool]) -> usize {
        self.edges
            .iter()
            .filter(|&&[u, v]| members[u as usize] && members[v as usize])
            .count()
    }

    pub fn is_independent(&self, members: &[bool]) -> bool {
        self.violating_edges(members) == 0
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&GraphRecord::from(self)).expect("graph serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let rec: GraphRecord =
            serde_json::from_str(s).map_err(|e| invalid(format!("graph json: {e}")))?;
        Self::from_edges(rec.n, rec.edges, rec.model)
    }
}

#[derive(Serialize, Deserialize)]
struct GraphRecord {
    n: usize,
    edges: Vec<[u32; 2]>,
    #[serde(flatten)]
    model: Model,
}

impl From<&MultiGraph> for GraphRecord {
    fn from(g: &MultiGraph) -> Self {
        Self {
            n: g.n,
            edges: g.edges.clone(),
            model: g.model,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loop_counts_twice() {
        let g = MultiGraph::from_edges(1, vec![[0, 0]], Model::Config { d: 2 }).unwrap();
        assert_eq!(g.degree(0), 2);
        assert!(g.has_loops());
        assert!(!g.is_independent(&[true]));
        assert!(g.is_independent(&[false]));
    }

    #[test]
    fn json_shape() {
        let g = MultiGraph::from_edges(2, vec![[0, 1]], Model::Config { d: 1 }).unwrap();
        let v: serde_json::Value = serde_json::from_str(&g.to_json()).unwrap();
        assert_eq!(v["n"], 2);
        assert_eq!(v["model"], "config");
        assert_eq!(v["params"]["d"], 1);
        assert_eq!(v["edges"][0][1], 1);
        assert_eq!(MultiGraph::from_json(&g.to_json()).unwrap(), g);
    }

    #[test]
    fn rejects_out_of_range_edges() {
        assert!(MultiGraph::from_edges(2, vec![[0, 2]], Model::Explicit).is_err());
    }

    #[test]
    fn multi_edge_detection() {
        let g = MultiGraph::from_edges(2, vec![[0, 1], [1, 0]], Model::Explicit).unwrap();
        assert!(g.has_multi_edges());
        assert!(!MultiGraph::cycle(4).has_multi_edges());
    }
}
