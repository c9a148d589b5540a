//! Exhaustive enumeration for tiny instances.

use super::{rho_to_pi, DensityProfile};
use crate::error::{invalid, Error, Result};
use crate::graph::MultiGraph;
use crate::scalar::Scalar;

/// Upper limits keeping enumeration tractable.
pub const MAX_BRUTE_N: usize = 14;
pub const MAX_BRUTE_K: usize = 2;
const MAX_PAIRING_HALF_EDGES: usize = 16;

/// Every perfect matching of the `n * d` half-edges, each as sorted pairs.
/// There are `(nd - 1)!!` of them.
pub fn all_pairings(n: usize, d: usize) -> Result<Vec<Vec<(u32, u32)>>> {
    let m = n * d;
    if m % 2 == 1 {
        return Err(invalid(format!("n*d = {m} is odd")));
    }
    if m > MAX_PAIRING_HALF_EDGES {
        return Err(Error::TooLarge(format!(
            "{m} half-edges; enumeration is limited to {MAX_PAIRING_HALF_EDGES}"
        )));
    }
    fn rec(free: &mut Vec<u32>, current: &mut Vec<(u32, u32)>, out: &mut Vec<Vec<(u32, u32)>>) {
        if free.is_empty() {
            out.push(current.clone());
            return;
        }
        let first = free.remove(0);
        for i in 0..free.len() {
            let partner = free.remove(i);
            current.push((first, partner));
            rec(free, current, out);
            current.pop();
            free.insert(i, partner);
        }
        free.insert(0, first);
    }
    let mut out = Vec::new();
    rec(&mut (0..m as u32).collect(), &mut Vec::new(), &mut out);
    Ok(out)
}

/// All independent vertex sets of `g` as bitmasks. A looped vertex is never
/// a member.
pub fn independent_sets(g: &MultiGraph) -> Result<Vec<u32>> {
    let n = g.n();
    if n > MAX_BRUTE_N {
        return Err(Error::TooLarge(format!(
            "n = {n}; enumeration is limited to {MAX_BRUTE_N}"
        )));
    }
    let mut adj = vec![0u32; n];
    for &[u, v] in g.edges() {
        adj[u as usize] |= 1 << v;
        adj[v as usize] |= 1 << u;
    }
    Ok((0..1u32 << n)
        .filter(|&s| (0..n).all(|v| s & (1 << v) == 0 || adj[v] & s == 0))
        .collect())
}

fn target_counts<S: Scalar>(rho: &DensityProfile<S>, n: usize) -> Result<Option<Vec<u32>>> {
    let pi = rho_to_pi(rho)?;
    let mut out = Vec::with_capacity(pi.pi().len());
    for &p in pi.pi() {
        let x = p.to_f64_lossy() * n as f64;
        let r = x.round();
        if (x - r).abs() > 1e-9 {
            return Ok(None);
        }
        out.push(r as u32);
    }
    Ok(Some(out))
}

/// Number of `k`-tuples `(I_1, ..., I_k)`, `I_i` independent in `gs[i]`,
/// whose density profile is exactly `rho`. All graphs share the vertex set.
pub fn brute_force_z_multi<S: Scalar>(gs: &[&MultiGraph], rho: &DensityProfile<S>) -> Result<u64> {
    let k = rho.k();
    if k == 0 || k > MAX_BRUTE_K || gs.len() != k {
        return Err(invalid(format!(
            "brute force needs 1 <= k <= {MAX_BRUTE_K} and one graph per copy"
        )));
    }
    let n = gs[0].n();
    if gs.iter().any(|g| g.n() != n) {
        return Err(invalid("graphs have different vertex counts"));
    }
    let Some(target) = target_counts(rho, n)? else {
        return Ok(0);
    };
    let lists = gs
        .iter()
        .map(|g| independent_sets(g))
        .collect::<Result<Vec<_>>>()?;
    let full = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    let count = match k {
        1 => lists[0]
            .iter()
            .filter(|s| s.count_ones() == target[1])
            .count() as u64,
        _ => {
            let mut total = 0u64;
            for &a in lists[0].iter().filter(|a| a.count_ones() == target[1] + target[3]) {
                for &b in &lists[1] {
                    if (a & b).count_ones() == target[3]
                        && (b & !a).count_ones() == target[2]
                        && (full & !(a | b)).count_ones() == target[0]
                    {
                        total += 1;
                    }
                }
            }
            total
        }
    };
    Ok(count)
}

/// [`brute_force_z_multi`] with the same graph for every copy.
pub fn brute_force_z<S: Scalar>(g: &MultiGraph, rho: &DensityProfile<S>) -> Result<u64> {
    let gs = vec![g; rho.k()];
    brute_force_z_multi(&gs, rho)
}

/// Every integer edge-count matrix `m` (row-major over `2^k` cells)
/// compatible with the cell sizes: symmetric, supported on disjoint cell
/// pairs, even diagonal, row `T` summing to `d * counts[T]`.
pub fn compatible_edge_counts(counts: &[u64], d: u64) -> Vec<Vec<u64>> {
    let c = counts.len();
    let cells: Vec<(usize, usize)> = (0..c)
        .flat_map(|t| (t..c).map(move |u| (t, u)))
        .filter(|&(t, u)| t & u == 0)
        .collect();
    let mut last = vec![None; c];
    for (i, &(t, u)) in cells.iter().enumerate() {
        last[t] = Some(i);
        last[u] = Some(i);
    }
    let mut need: Vec<u64> = counts.iter().map(|&x| x * d).collect();
    // a row with demand but no admissible cell cannot be satisfied
    if (0..c).any(|t| last[t].is_none() && need[t] > 0) {
        return Vec::new();
    }
    let mut m = vec![0u64; c * c];
    let mut out = Vec::new();

    fn rec(
        i: usize,
        cells: &[(usize, usize)],
        last: &[Option<usize>],
        need: &mut [u64],
        m: &mut [u64],
        c: usize,
        out: &mut Vec<Vec<u64>>,
    ) {
        if i == cells.len() {
            if need.iter().all(|&x| x == 0) {
                out.push(m.to_vec());
            }
            return;
        }
        let (t, u) = cells[i];
        let diag = t == u;
        let cap = if diag { need[t] } else { need[t].min(need[u]) };
        let mut x = 0;
        while x <= cap {
            if diag {
                need[t] -= x;
            } else {
                need[t] -= x;
                need[u] -= x;
            }
            let closed_ok = [t, u]
                .iter()
                .all(|&r| last[r] != Some(i) || need[r] == 0);
            if closed_ok {
                m[t * c + u] = x;
                m[u * c + t] = x;
                rec(i + 1, cells, last, need, m, c, out);
                m[t * c + u] = 0;
                m[u * c + t] = 0;
            }
            if diag {
                need[t] += x;
            } else {
                need[t] += x;
                need[u] += x;
            }
            x += if diag { 2 } else { 1 };
        }
    }
    rec(0, &cells, &last, &mut need, &mut m, c, &mut out);
    out
}
