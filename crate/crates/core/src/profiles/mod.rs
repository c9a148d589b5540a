//! Density profiles, partition measures and edge profiles of `k`-tuples of
//! vertex sets, with the subset-lattice transforms between them.
//!
//! Subsets `T ⊆ [k]` are bitmasks: bit `i` set means copy `i + 1` is in `T`.
//! Everything here that only needs ring arithmetic is generic over
//! [`Scalar`], so the same code runs on floats and exact rationals.

mod counting;
mod entropy;
mod oracle;

pub use counting::{
    er_log_expected_z, intersecting_pairs_direct, intersecting_pairs_from_counts,
    log_expected_z, log_expected_z_counts,
};
pub use entropy::{
    asymptotic_rate, entropy, entropy_hat, jensen_equality_matrix, jensen_gap,
    max_entropy_check, rate_bound, AsymptoticRate, Entropies,
};
pub use oracle::{
    all_pairings, brute_force_z, brute_force_z_multi, compatible_edge_counts,
    independent_sets,
};

use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;
use crate::special::binomial;
use std::collections::BTreeMap;

/// Largest supported number of copies; the lattice has `2^k` cells.
pub const MAX_K: usize = 20;

fn check_k(k: usize) -> Result<()> {
    if k > MAX_K {
        Err(Error::TooLarge(format!("k = {k} exceeds {MAX_K}")))
    } else {
        Ok(())
    }
}

fn check_len<S>(k: usize, cells: &[S]) -> Result<()> {
    check_k(k)?;
    if cells.len() != 1 << k {
        return Err(invalid(format!(
            "expected {} cells for k = {k}, got {}",
            1usize << k,
            cells.len()
        )));
    }
    Ok(())
}

fn is_close<S: Scalar>(a: S, b: S) -> bool {
    (a - b).abs() <= S::tolerance()
}

/// `rho(T)` = density of `∩_{i∈T} I_i`, with `rho(∅) = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityProfile<S = f64> {
    k: usize,
    rho: Vec<S>,
}

impl<S: Scalar> DensityProfile<S> {
    /// Checks `rho(∅) = 1`. Monotonicity and non-negativity of the induced
    /// partition are checked by [`rho_to_pi`].
    pub fn new(k: usize, rho: Vec<S>) -> Result<Self> {
        check_len(k, &rho)?;
        if !is_close(rho[0], S::one()) {
            return Err(invalid("rho(empty set) must be 1"));
        }
        Ok(Self { k, rho })
    }

    /// The profile with `rho(T) = alpha[|T| - 1]` for `T ≠ ∅`.
    pub fn symmetric(alpha: &[S]) -> Result<Self> {
        let k = alpha.len();
        check_k(k)?;
        let rho = (0..1usize << k)
            .map(|t| {
                let c = t.count_ones() as usize;
                if c == 0 {
                    S::one()
                } else {
                    alpha[c - 1]
                }
            })
            .collect();
        Self::new(k, rho)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn rho(&self) -> &[S] {
        &self.rho
    }

    pub fn get(&self, t: usize) -> S {
        self.rho[t]
    }
}

impl DensityProfile<f64> {
    /// Empirical profile of explicit membership vectors (all of length `n`).
    pub fn from_sets(sets: &[Vec<bool>]) -> Result<Self> {
        let counts = cell_counts(sets)?;
        let n = sets.first().map_or(0, Vec::len).max(1) as f64;
        let pi = PartitionMeasure::new(sets.len(), counts.iter().map(|&c| c as f64 / n).collect())?;
        Ok(pi_to_rho(&pi))
    }

    /// JSON `{k, rho: {bitmask: value}}`.
    pub fn to_json(&self) -> String {
        let rho: BTreeMap<String, f64> = self
            .rho
            .iter()
            .enumerate()
            .map(|(t, &v)| (t.to_string(), v))
            .collect();
        serde_json::json!({ "k": self.k, "rho": rho }).to_string()
    }

    /// Accepts the JSON form; missing cells other than `∅` are an error.
    pub fn from_json(s: &str) -> Result<Self> {
        let v: serde_json::Value =
            serde_json::from_str(s).map_err(|e| invalid(format!("profile json: {e}")))?;
        let k = v["k"]
            .as_u64()
            .ok_or_else(|| invalid("profile json: k missing"))? as usize;
        check_k(k)?;
        let map = v["rho"]
            .as_object()
            .ok_or_else(|| invalid("profile json: rho missing"))?;
        let mut rho = vec![f64::NAN; 1 << k];
        rho[0] = 1.0;
        for (key, val) in map {
            let t: usize = key
                .parse()
                .map_err(|_| invalid(format!("profile json: bad bitmask {key:?}")))?;
            if t >= rho.len() {
                return Err(invalid(format!("profile json: bitmask {t} out of range")));
            }
            rho[t] = val
                .as_f64()
                .ok_or_else(|| invalid(format!("profile json: rho[{t}] not a number")))?;
        }
        if let Some(t) = rho.iter().position(|x| x.is_nan()) {
            return Err(invalid(format!("profile json: rho[{t}] missing")));
        }
        Self::new(k, rho)
    }
}

/// Number of vertices in each cell `{v : {i : v ∈ I_i} = T}`.
pub fn cell_counts(sets: &[Vec<bool>]) -> Result<Vec<u64>> {
    let k = sets.len();
    check_k(k)?;
    let n = sets.first().map_or(0, Vec::len);
    if sets.iter().any(|s| s.len() != n) {
        return Err(invalid("membership vectors differ in length"));
    }
    let mut counts = vec![0u64; 1 << k];
    for v in 0..n {
        let t = (0..k).fold(0usize, |t, i| t | (usize::from(sets[i][v]) << i));
        counts[t] += 1;
    }
    Ok(counts)
}

/// `pi(T)`: mass of the cell of vertices in exactly the sets indexed by `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionMeasure<S = f64> {
    k: usize,
    pi: Vec<S>,
}

impl<S: Scalar> PartitionMeasure<S> {
    pub fn new(k: usize, pi: Vec<S>) -> Result<Self> {
        check_len(k, &pi)?;
        if let Some((cell, &v)) = pi.iter().enumerate().find(|(_, &v)| v < -S::tolerance()) {
            return Err(Error::InconsistentProfile {
                cell,
                value: v.to_f64_lossy(),
            });
        }
        let total = pi.iter().fold(S::zero(), |a, &b| a + b);
        if (total - S::one()).abs() > S::tolerance() * S::from_usize_exact(pi.len()) {
            return Err(invalid(format!(
                "partition measure sums to {}",
                total.to_f64_lossy()
            )));
        }
        Ok(Self { k, pi })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn pi(&self) -> &[S] {
        &self.pi
    }

    /// `w(T) = Σ_{T' ∩ T = ∅} pi(T')`: subset sums evaluated at complements.
    pub fn weights(&self) -> Vec<S> {
        let mut sub = self.pi.clone();
        subset_zeta(&mut sub, self.k);
        let full = (1usize << self.k) - 1;
        (0..sub.len()).map(|t| sub[full ^ t]).collect()
    }
}

/// In place: `a[T] <- Σ_{T' ⊆ T} a[T']`.
fn subset_zeta<S: Scalar>(a: &mut [S], k: usize) {
    for i in 0..k {
        let bit = 1 << i;
        for t in 0..a.len() {
            if t & bit != 0 {
                a[t] = a[t] + a[t ^ bit];
            }
        }
    }
}

/// In place: `a[T] <- Σ_{T' ⊇ T} a[T']`, or its inverse.
fn superset_transform<S: Scalar>(a: &mut [S], k: usize, inverse: bool) {
    for i in 0..k {
        let bit = 1 << i;
        for t in 0..a.len() {
            if t & bit == 0 {
                let hi = a[t | bit];
                a[t] = if inverse { a[t] - hi } else { a[t] + hi };
            }
        }
    }
}

/// `pi(T) = Σ_{T' ⊇ T} (-1)^{|T' \ T|} rho(T')`; rejects negative cells.
pub fn rho_to_pi<S: Scalar>(rho: &DensityProfile<S>) -> Result<PartitionMeasure<S>> {
    let mut a = rho.rho.clone();
    superset_transform(&mut a, rho.k, true);
    PartitionMeasure::new(rho.k, a)
}

/// `rho(T) = Σ_{T' ⊇ T} pi(T')`.
pub fn pi_to_rho<S: Scalar>(pi: &PartitionMeasure<S>) -> DensityProfile<S> {
    let mut a = pi.pi.clone();
    superset_transform(&mut a, pi.k, false);
    DensityProfile { k: pi.k, rho: a }
}

fn binom<S: Scalar>(n: usize, k: usize) -> S {
    S::from_f64(binomial(n as u64, k as u64)).expect("binomial fits the scalar type")
}

/// Symmetric Möbius transform: `alpha[j-1]` is the common value on
/// `|T| = j`, and the result holds `beta_j` likewise:
/// `beta_j = Σ_t C(k-j, t) (-1)^t alpha_{j+t}`.
pub fn alpha_to_beta<S: Scalar>(alpha: &[S]) -> Vec<S> {
    let k = alpha.len();
    (1..=k)
        .map(|j| {
            (0..=k - j).fold(S::zero(), |acc, t| {
                let term = binom::<S>(k - j, t) * alpha[j + t - 1];
                if t % 2 == 0 {
                    acc + term
                } else {
                    acc - term
                }
            })
        })
        .collect()
}

/// Inverse of [`alpha_to_beta`]: `alpha_j = Σ_t C(k-j, t) beta_{j+t}`.
pub fn beta_to_alpha<S: Scalar>(beta: &[S]) -> Vec<S> {
    let k = beta.len();
    (1..=k)
        .map(|j| {
            (0..=k - j).fold(S::zero(), |acc, t| acc + binom::<S>(k - j, t) * beta[j + t - 1])
        })
        .collect()
}

/// `Σ_{i=1}^k (-1)^{i-1} C(k,i) alpha_i (2 - alpha_i)`.
pub fn binom_sum<S: Scalar>(alpha: &[S]) -> S {
    let k = alpha.len();
    let two = S::one() + S::one();
    alpha.iter().enumerate().fold(S::zero(), |acc, (idx, &a)| {
        let term = binom::<S>(k, idx + 1) * a * (two - a);
        if idx % 2 == 0 {
            acc + term
        } else {
            acc - term
        }
    })
}

/// `2 Σ_{T≠∅} beta(T) - Σ_{T ∩ T' ≠ ∅} beta(T) beta(T')` for a symmetric
/// `beta` given per cardinality, counting subset pairs combinatorially.
pub fn beta_quadratic<S: Scalar>(beta: &[S]) -> S {
    let k = beta.len();
    let two = S::one() + S::one();
    let mut linear = S::zero();
    let mut quad = S::zero();
    for a in 1..=k {
        linear = linear + binom::<S>(k, a) * beta[a - 1];
        for b in 1..=k {
            let pairs = binom::<S>(k, a) * (binom::<S>(k, b) - binom::<S>(k - a, b));
            quad = quad + pairs * beta[a - 1] * beta[b - 1];
        }
    }
    two * linear - quad
}

/// `s_k(x) = 1 + (1-x) + ... + (1-x)^{k-1}`, by Horner's rule; equals
/// `(1 - (1-x)^k) / x` and `k` at `x = 0`.
pub fn s_k<S: Scalar>(x: S, k: usize) -> S {
    let q = S::one() - x;
    (1..k).fold(S::one(), |acc, _| S::one() + q * acc)
}

/// The alternating form `Σ_{i=1}^k (-1)^{i-1} C(k,i) x^{i-1}`. Suffers
/// cancellation for large `k` in floating point; exact on rationals.
pub fn s_k_alternating<S: Scalar>(x: S, k: usize) -> S {
    let mut pow = S::one();
    let mut acc = S::zero();
    for i in 1..=k {
        let term = binom::<S>(k, i) * pow;
        acc = if i % 2 == 1 { acc + term } else { acc - term };
        pow = pow * x;
    }
    acc
}

/// Edge profile: `m[T * 2^k + T']` is the fraction of directed half-edge
/// pairs going from cell `T` to cell `T'`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeProfile<S = f64> {
    k: usize,
    m: Vec<S>,
}

impl<S: Scalar> EdgeProfile<S> {
    /// Checks shape, non-negativity, symmetry, the support constraint and
    /// total mass, naming the first violated constraint.
    pub fn new(k: usize, m: Vec<S>) -> Result<Self> {
        check_k(k)?;
        let c = 1usize << k;
        if m.len() != c * c {
            return Err(invalid(format!("edge profile needs {} entries", c * c)));
        }
        for t in 0..c {
            for u in 0..c {
                let v = m[t * c + u];
                if v < -S::tolerance() {
                    return Err(Error::Constraint(format!(
                        "non-negativity: M({t},{u}) = {}",
                        v.to_f64_lossy()
                    )));
                }
                if t & u != 0 && v.abs() > S::tolerance() {
                    return Err(Error::Constraint(format!(
                        "support: M({t},{u}) > 0 but the cells intersect"
                    )));
                }
                if !is_close(v, m[u * c + t]) {
                    return Err(Error::Constraint(format!("symmetry: M({t},{u}) != M({u},{t})")));
                }
            }
        }
        let total = m.iter().fold(S::zero(), |a, &b| a + b);
        if (total - S::one()).abs() > S::tolerance() * S::from_usize_exact(m.len()) {
            return Err(Error::Constraint(format!(
                "normalization: entries sum to {}",
                total.to_f64_lossy()
            )));
        }
        Ok(Self { k, m })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn cells(&self) -> usize {
        1 << self.k
    }

    pub fn entries(&self) -> &[S] {
        &self.m
    }

    pub fn get(&self, t: usize, u: usize) -> S {
        self.m[t * self.cells() + u]
    }

    /// Row marginal, which for a valid profile is the partition measure.
    pub fn marginal(&self) -> Result<PartitionMeasure<S>> {
        let c = self.cells();
        let pi = (0..c)
            .map(|t| (0..c).fold(S::zero(), |a, u| a + self.m[t * c + u]))
            .collect();
        PartitionMeasure::new(self.k, pi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;

    type Q = Ratio<i64>;

    fn q(a: i64, b: i64) -> Q {
        Ratio::new(a, b)
    }

    #[test]
    fn k1_transform() {
        let rho = DensityProfile::<f64>::new(1, vec![1.0, 0.3]).unwrap();
        let pi = rho_to_pi(&rho).unwrap();
        assert!((pi.pi()[0] - 0.7).abs() < 1e-15 && (pi.pi()[1] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn k2_transform_exact() {
        let (a, b) = (q(1, 3), q(1, 7));
        let rho = DensityProfile::new(2, vec![q(1, 1), a, a, b]).unwrap();
        let pi = rho_to_pi(&rho).unwrap();
        assert_eq!(pi.pi(), &[q(1, 1) - a - a + b, a - b, a - b, b]);
        assert_eq!(pi_to_rho(&pi), rho);
    }

    #[test]
    fn point_masses() {
        let empty = PartitionMeasure::new(3, {
            let mut v = vec![0.0; 8];
            v[0] = 1.0;
            v
        })
        .unwrap();
        assert!(pi_to_rho(&empty).rho()[1..].iter().all(|&x| x == 0.0));
        let full = PartitionMeasure::new(3, {
            let mut v = vec![0.0; 8];
            v[7] = 1.0;
            v
        })
        .unwrap();
        assert!(pi_to_rho(&full).rho().iter().all(|&x| x == 1.0));
    }

    #[test]
    fn invalid_profile_named_cell() {
        // rho({1,2}) larger than rho({1}) makes pi({1}) negative
        let rho = DensityProfile::new(2, vec![1.0, 0.2, 0.5, 0.4]).unwrap();
        match rho_to_pi(&rho) {
            Err(Error::InconsistentProfile { cell, .. }) => assert_eq!(cell, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn weights_k1() {
        let pi = PartitionMeasure::new(1, vec![0.5, 0.5]).unwrap();
        assert_eq!(pi.weights(), vec![1.0, 0.5]);
    }

    #[test]
    fn alpha_beta_small_cases() {
        assert_eq!(alpha_to_beta(&[q(3, 2)]), vec![q(3, 2)]);
        let (a, b) = (q(5, 4), q(1, 3));
        assert_eq!(alpha_to_beta(&[a, b]), vec![a - b, b]);
        assert_eq!(beta_to_alpha(&alpha_to_beta(&[a, b])), vec![a, b]);
    }

    #[test]
    fn binom_sum_examples() {
        assert_eq!(binom_sum(&[q(1, 2)]), q(3, 4));
        assert_eq!(binom_sum(&[q(1, 1), q(1, 1)]), q(1, 1));
        let alpha = [q(3, 2), q(1, 1), q(1, 2)];
        assert_eq!(binom_sum(&alpha), beta_quadratic(&alpha_to_beta(&alpha)));
    }

    #[test]
    fn s_k_values() {
        assert_eq!(s_k(0.0, 7), 7.0);
        assert_eq!(s_k(1.0, 7), 1.0);
        assert_eq!(s_k(0.5, 2), 1.5);
        assert_eq!(s_k(q(1, 3), 5), s_k_alternating(q(1, 3), 5));
        assert_eq!(s_k(q(0, 1), 4), q(4, 1));
    }

    #[test]
    fn generic_over_f32() {
        let rho = DensityProfile::<f32>::symmetric(&[0.25, 0.1]).unwrap();
        let back = pi_to_rho(&rho_to_pi(&rho).unwrap());
        for (a, b) in back.rho().iter().zip(rho.rho()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn json_round_trip() {
        let rho = DensityProfile::symmetric(&[0.25, 0.125]).unwrap();
        let back = DensityProfile::from_json(&rho.to_json()).unwrap();
        assert_eq!(back, rho);
        assert!(DensityProfile::from_json(r#"{"k":1,"rho":{}}"#).is_err());
    }

    #[test]
    fn edge_profile_constraints() {
        let ok = EdgeProfile::new(1, vec![0.0, 0.5, 0.5, 0.0]).unwrap();
        assert_eq!(ok.marginal().unwrap().pi(), &[0.5, 0.5]);
        let bad_support = EdgeProfile::new(1, vec![0.0, 0.25, 0.25, 0.5]);
        assert!(matches!(bad_support, Err(Error::Constraint(ref s)) if s.starts_with("support")));
        let asym = EdgeProfile::new(1, vec![0.2, 0.5, 0.3, 0.0]);
        assert!(matches!(asym, Err(Error::Constraint(ref s)) if s.starts_with("symmetry")));
    }

    #[test]
    fn from_sets_counts() {
        let sets = vec![vec![true, false, true, false], vec![true, true, false, false]];
        let rho = DensityProfile::from_sets(&sets).unwrap();
        assert_eq!(rho.rho(), &[1.0, 0.5, 0.5, 0.25]);
        assert_eq!(cell_counts(&sets).unwrap(), vec![1, 1, 1, 1]);
    }
}
