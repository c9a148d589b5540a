use super::{Model, MultiGraph};
use crate::error::{invalid, Result};
use crate::rng::{chacha, derive, tag};
use rand::seq::SliceRandom;
use rand::Rng;

/// A uniformly random perfect matching of the `n * d` half-edges, returned
/// as sorted pairs of half-edge indices. Half-edge `h` belongs to vertex
/// `h / d`.
pub fn sample_pairing(n: usize, d: usize, seed: u64) -> Result<Vec<(u32, u32)>> {
    if n == 0 || d == 0 {
        return Err(invalid("configuration model needs n >= 1 and d >= 1"));
    }
    let m = n * d;
    if m % 2 == 1 {
        return Err(invalid(format!("n*d = {m} is odd")));
    }
    let mut half: Vec<u32> = (0..m as u32).collect();
    half.shuffle(&mut chacha(derive(seed, tag::EDGES, 0)));
    let mut pairs: Vec<(u32, u32)> = half
        .chunks_exact(2)
        .map(|c| (c[0].min(c[1]), c[0].max(c[1])))
        .collect();
    pairs.sort_unstable();
    Ok(pairs)
}

/// Glues a half-edge pairing into a multigraph on `n` vertices of degree `d`.
pub fn config_graph_from_pairing(n: usize, d: usize, pairs: &[(u32, u32)]) -> Result<MultiGraph> {
    let edges = pairs
        .iter()
        .map(|&(a, b)| [a / d as u32, b / d as u32])
        .collect();
    MultiGraph::from_edges(n, edges, Model::Config { d })
}

/// Configuration-model multigraph: loops and multi-edges are kept.
pub fn sample_config_model(n: usize, d: usize, seed: u64) -> Result<MultiGraph> {
    config_graph_from_pairing(n, d, &sample_pairing(n, d, seed)?)
}

/// Visits the pairs `(i, j)`, `j < i < m`, each independently with
/// probability `p`, by geometric skipping.
fn bernoulli_pairs<R: Rng>(m: usize, p: f64, rng: &mut R, mut visit: impl FnMut(usize, usize)) {
    if m < 2 || p <= 0.0 {
        return;
    }
    if p >= 1.0 {
        for i in 1..m {
            for j in 0..i {
                visit(i, j);
            }
        }
        return;
    }
    let log_q = (1.0 - p).ln();
    let (mut i, mut j) = (1usize, -1i64);
    loop {
        let r: f64 = rng.random();
        let skip = ((1.0 - r).ln() / log_q).floor();
        // a skip beyond the remaining pairs ends the walk
        if !skip.is_finite() || skip > (m * m) as f64 {
            return;
        }
        j += 1 + skip as i64;
        while j >= i as i64 && i < m {
            j -= i as i64;
            i += 1;
        }
        if i >= m {
            return;
        }
        visit(i, j as usize);
    }
}

/// `ER(n, lambda/n)`.
pub fn sample_er(n: usize, lambda: f64, seed: u64) -> Result<MultiGraph> {
    if n == 0 {
        return Err(invalid("ER graph needs n >= 1"));
    }
    if !(0.0..=n as f64).contains(&lambda) {
        return Err(invalid(format!("lambda = {lambda} outside [0, n]")));
    }
    let p = lambda / n as f64;
    let mut edges = Vec::new();
    let mut rng = chacha(derive(seed, tag::EDGES, 0));
    bernoulli_pairs(n, p, &mut rng, |i, j| edges.push([j as u32, i as u32]));
    MultiGraph::from_edges(n, edges, Model::Er { lambda })
}

/// Keeps every edge of `g` that is not inside `subset x subset` and redraws
/// each pair inside the subset independently with probability `lambda / n`.
///
/// `subset[v]` marks membership. Each call with a different seed gives an
/// independent redraw of the induced subgraph on the subset.
pub fn er_resample(g: &MultiGraph, subset: &[bool], lambda: f64, seed: u64) -> Result<MultiGraph> {
    let n = g.n();
    if subset.len() != n {
        return Err(invalid("subset mask length differs from n"));
    }
    let mut edges: Vec<[u32; 2]> = g
        .edges()
        .iter()
        .copied()
        .filter(|&[u, v]| !(subset[u as usize] && subset[v as usize]))
        .collect();
    let members: Vec<u32> = (0..n as u32).filter(|&v| subset[v as usize]).collect();
    let mut rng = chacha(derive(seed, tag::EDGES, 1));
    bernoulli_pairs(members.len(), lambda / n as f64, &mut rng, |i, j| {
        edges.push([members[j], members[i]])
    });
    MultiGraph::from_edges(n, edges, Model::Er { lambda })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unique_pairings() {
        let g = sample_config_model(2, 1, 17).unwrap();
        assert_eq!(g.edges(), &[[0, 1]]);
        let g = sample_config_model(1, 2, 17).unwrap();
        assert_eq!(g.edges(), &[[0, 0]]);
    }

    #[test]
    fn odd_total_rejected() {
        assert!(sample_config_model(3, 3, 0).is_err());
        assert!(sample_config_model(0, 2, 0).is_err());
    }

    #[test]
    fn config_degrees_exact() {
        for seed in 0..20 {
            let d = 3 + seed as usize % 2;
            let g = sample_config_model(50, d, seed).unwrap();
            assert!((0..50).all(|v| g.degree(v) == d));
            assert_eq!(g.edge_count(), 50 * d / 2);
        }
    }

    #[test]
    fn er_extremes() {
        assert_eq!(sample_er(5, 0.0, 1).unwrap().edge_count(), 0);
        let k3 = sample_er(3, 3.0, 1).unwrap();
        assert_eq!(k3.edge_count(), 3);
        assert!(!k3.has_loops() && !k3.has_multi_edges());
        assert!(sample_er(3, 3.5, 1).is_err());
    }

    #[test]
    fn er_is_simple() {
        for seed in 0..10 {
            let g = sample_er(200, 5.0, seed).unwrap();
            assert!(!g.has_loops());
            assert!(!g.has_multi_edges());
        }
    }

    #[test]
    fn resample_with_empty_subset_is_identity() {
        let g = sample_er(60, 3.0, 4).unwrap();
        let h = er_resample(&g, &vec![false; 60], 3.0, 9).unwrap();
        let mut a = g.edges().to_vec();
        let mut b = h.edges().to_vec();
        a.sort();
        b.sort();
        assert_eq!(a, b);
    }

    #[test]
    fn resample_keeps_edges_leaving_the_subset() {
        let g = sample_er(80, 6.0, 5).unwrap();
        let subset: Vec<bool> = (0..80).map(|v| v % 3 == 0).collect();
        let h = er_resample(&g, &subset, 6.0, 10).unwrap();
        let norm = |e: &[u32; 2]| (e[0].min(e[1]), e[0].max(e[1]));
        let hset: std::collections::HashSet<_> = h.edges().iter().map(norm).collect();
        for e in g.edges() {
            if !(subset[e[0] as usize] && subset[e[1] as usize]) {
                assert!(hset.contains(&norm(e)));
            }
        }
        assert!(!h.has_multi_edges());
    }
}
