use super::{cell_counts, check_k, rho_to_pi, DensityProfile, EdgeProfile};
use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;
use crate::special::LnFactorial;

fn to_count(x: f64, what: impl FnOnce() -> String) -> Result<u64> {
    let r = x.round();
    if r < 0.0 || (x - r).abs() > 1e-9 {
        return Err(Error::Constraint(format!("integrality: {} = {x}", what())));
    }
    Ok(r as u64)
}

/// Exact `ln E[Z(rho, M)]` over the configuration model from integer data:
/// `counts[T] = n pi(T)` and `m[T * 2^k + T'] = nd M(T,T')`.
///
/// Multinomial for the vertex partition, times the ways to split each
/// cell's half-edges among target cells, times the matchings between
/// the resulting groups, over `(nd - 1)!!` pairings.
pub fn log_expected_z_counts(counts: &[u64], m: &[u64], n: u64, d: u64) -> Result<f64> {
    let c = counts.len();
    if !c.is_power_of_two() || m.len() != c * c {
        return Err(invalid("cell and edge count arrays have inconsistent sizes"));
    }
    if counts.iter().sum::<u64>() != n {
        return Err(Error::Constraint("marginal: cell sizes do not sum to n".into()));
    }
    if (n * d) % 2 == 1 {
        return Err(Error::Constraint("parity: n*d is odd".into()));
    }
    for t in 0..c {
        for u in 0..c {
            let x = m[t * c + u];
            if x != m[u * c + t] {
                return Err(Error::Constraint(format!("symmetry: m({t},{u}) != m({u},{t})")));
            }
            if x > 0 && t & u != 0 {
                return Err(Error::Constraint(format!(
                    "support: m({t},{u}) > 0 but the cells intersect"
                )));
            }
        }
        if m[t * c + t] % 2 == 1 {
            return Err(Error::Constraint(format!("evenness: m({t},{t}) is odd")));
        }
        let row: u64 = m[t * c..(t + 1) * c].iter().sum();
        if row != d * counts[t] {
            return Err(Error::Constraint(format!(
                "marginal: row {t} carries {row} half-edges, cell needs {}",
                d * counts[t]
            )));
        }
    }
    let lf = LnFactorial::new((n * d) as usize);
    let mut total = lf.ln_multinomial(n, counts);
    for t in 0..c {
        total += lf.ln_multinomial(d * counts[t], &m[t * c..(t + 1) * c]);
        for u in 0..c {
            if u != t {
                total += 0.5 * lf.ln_fact(m[t * c + u]);
            }
        }
        total += lf.ln_double_fact_odd(m[t * c + t]);
    }
    Ok(total - lf.ln_double_fact_odd(n * d))
}

/// `ln E[Z(rho, M)]` from normalized profiles; `n pi(T)` and `nd M(T,T')`
/// must be integers.
pub fn log_expected_z<S: Scalar>(
    rho: &DensityProfile<S>,
    m: &EdgeProfile<S>,
    n: u64,
    d: u64,
) -> Result<f64> {
    if rho.k() != m.k() {
        return Err(invalid("density and edge profiles have different k"));
    }
    let pi = rho_to_pi(rho)?;
    let counts = pi
        .pi()
        .iter()
        .enumerate()
        .map(|(t, &p)| to_count(p.to_f64_lossy() * n as f64, || format!("n*pi({t})")))
        .collect::<Result<Vec<_>>>()?;
    let c = m.cells();
    let edges = m
        .entries()
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            to_count(x.to_f64_lossy() * (n * d) as f64, || {
                format!("nd*M({},{})", i / c, i % c)
            })
        })
        .collect::<Result<Vec<_>>>()?;
    log_expected_z_counts(&counts, &edges, n, d)
}

/// Number of vertex pairs `{u, v}` whose membership patterns intersect,
/// from the cell sizes: `Σ_{T≠∅} C(c_T, 2) + Σ_{T<T', T∩T'≠∅} c_T c_T'`.
pub fn intersecting_pairs_from_counts(counts: &[u64]) -> u64 {
    let c = counts.len();
    let mut total = 0;
    for t in 1..c {
        total += counts[t] * counts[t].saturating_sub(1) / 2;
        for u in t + 1..c {
            if t & u != 0 {
                total += counts[t] * counts[u];
            }
        }
    }
    total
}

/// The same pair count by direct enumeration of vertex pairs.
pub fn intersecting_pairs_direct(sets: &[Vec<bool>]) -> Result<u64> {
    check_k(sets.len())?;
    let n = sets.first().map_or(0, Vec::len);
    let pattern: Vec<usize> = (0..n)
        .map(|v| (0..sets.len()).fold(0, |t, i| t | (usize::from(sets[i][v]) << i)))
        .collect();
    let mut total = 0;
    for u in 0..n {
        for v in u + 1..n {
            if pattern[u] & pattern[v] != 0 {
                total += 1;
            }
        }
    }
    // cross-check the input is well formed
    let _ = cell_counts(sets)?;
    Ok(total)
}

/// `ln` of the first-moment expression for `k`-tuples of sets in coupled
/// Erdős–Rényi graphs: the vertex multinomial times `(1 - lambda/n)` to the
/// number of intersecting pairs. Exact for `k = 1`.
pub fn er_log_expected_z<S: Scalar>(rho: &DensityProfile<S>, n: u64, lambda: f64) -> Result<f64> {
    if !(0.0..n as f64).contains(&lambda) {
        return Err(invalid(format!("lambda = {lambda} must lie in [0, n)")));
    }
    let pi = rho_to_pi(rho)?;
    let counts = pi
        .pi()
        .iter()
        .enumerate()
        .map(|(t, &p)| to_count(p.to_f64_lossy() * n as f64, || format!("n*pi({t})")))
        .collect::<Result<Vec<_>>>()?;
    let lf = LnFactorial::new(n as usize);
    let pairs = intersecting_pairs_from_counts(&counts) as f64;
    let edge_term = if pairs == 0.0 {
        0.0
    } else {
        pairs * (-lambda / n as f64).ln_1p()
    };
    Ok(lf.ln_multinomial(n, &counts) + edge_term)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_profile_counts_once() {
        // n = 2, d = 2, k = 1, nothing selected: all 4 half-edges in cell ∅
        let v = log_expected_z_counts(&[2, 0], &[4, 0, 0, 0], 2, 2).unwrap();
        assert!(v.abs() < 1e-14);
    }

    #[test]
    fn er_hand_value() {
        let rho = DensityProfile::new(1, vec![1.0, 0.5]).unwrap();
        let v = er_log_expected_z(&rho, 4, 2.0).unwrap();
        assert!((v - 3f64.ln()).abs() < 1e-14);
        let empty = DensityProfile::new(1, vec![1.0, 0.0]).unwrap();
        assert!(er_log_expected_z(&empty, 4, 2.0).unwrap().abs() < 1e-14);
    }

    #[test]
    fn pair_counts_small() {
        assert_eq!(intersecting_pairs_from_counts(&[3, 4]), 6);
        assert_eq!(intersecting_pairs_from_counts(&[5, 0]), 0);
        let sets = vec![
            vec![true, true, false, false, true, false],
            vec![false, true, true, false, true, true],
        ];
        let counts = cell_counts(&sets).unwrap();
        assert_eq!(
            intersecting_pairs_direct(&sets).unwrap(),
            intersecting_pairs_from_counts(&counts)
        );
    }

    #[test]
    fn named_constraints() {
        let err = |r: Result<f64>| match r {
            Err(Error::Constraint(s)) => s,
            other => panic!("expected a constraint error, got {other:?}"),
        };
        assert!(err(log_expected_z_counts(&[1, 1], &[0, 1, 2, 0], 2, 2)).starts_with("symmetry"));
        assert!(err(log_expected_z_counts(&[2, 0], &[2, 0, 0, 0], 2, 2)).starts_with("marginal"));
        assert!(log_expected_z_counts(&[1, 1], &[0, 2, 2, 0], 2, 2).is_ok());
        assert!(err(log_expected_z_counts(&[2, 0], &[3, 0, 0, 0], 2, 2)).starts_with("evenness"));
        assert!(err(log_expected_z_counts(&[1, 1], &[2, 0, 0, 2], 2, 2)).starts_with("support"));
        let rho = DensityProfile::new(1, vec![1.0, 1.0 / 3.0]).unwrap();
        let m = EdgeProfile::new(1, vec![0.0, 0.5, 0.5, 0.0]).unwrap();
        assert!(err(log_expected_z(&rho, &m, 2, 2)).starts_with("integrality"));
    }
}
