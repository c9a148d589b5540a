use super::{alpha_to_beta, binom_sum, rho_to_pi, DensityProfile, EdgeProfile, PartitionMeasure};
use crate::error::Result;
use crate::scalar::Scalar;
use num_traits::Float;

/// `h(x) = -x log x` with `h(0) = 0`.
fn h<S: Float>(x: S) -> S {
    if x <= S::zero() {
        S::zero()
    } else {
        -x * x.ln()
    }
}

/// Shannon entropy (natural log) of a probability vector.
pub fn entropy<S: Scalar + Float>(p: &[S]) -> S {
    p.iter().fold(S::zero(), |acc, &x| acc + h(x))
}

/// `Ĥ(pi) = Σ_T pi(T) log w(T)`, which is never positive.
pub fn entropy_hat<S: Scalar + Float>(pi: &PartitionMeasure<S>) -> S {
    let w = pi.weights();
    pi.pi()
        .iter()
        .zip(&w)
        .filter(|(&p, _)| p > S::zero())
        .fold(S::zero(), |acc, (&p, &wt)| acc + p * wt.ln())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Entropies<S = f64> {
    pub h_pi: S,
    /// Present when computed from an edge profile.
    pub h_m: Option<S>,
    pub h_hat: S,
}

impl<S: Scalar + Float> Entropies<S> {
    pub fn of_measure(pi: &PartitionMeasure<S>) -> Self {
        Self {
            h_pi: entropy(pi.pi()),
            h_m: None,
            h_hat: entropy_hat(pi),
        }
    }

    /// Entropies of an edge profile and of its marginal.
    pub fn of_edge_profile(m: &EdgeProfile<S>) -> Result<Self> {
        let pi = m.marginal()?;
        Ok(Self {
            h_m: Some(entropy(m.entries())),
            ..Self::of_measure(&pi)
        })
    }
}

/// `2 H(pi) + Ĥ(pi) - H(M)` for a valid edge profile with marginal `pi`.
/// The maximum-entropy inequality says this is non-negative.
pub fn max_entropy_check<S: Scalar + Float>(m: &EdgeProfile<S>) -> Result<S> {
    let e = Entropies::of_edge_profile(m)?;
    let two = S::one() + S::one();
    Ok(two * e.h_pi + e.h_hat - e.h_m.expect("edge entropy computed"))
}

/// The matrix `M(T,T') = pi(T) pi(T') / w(T')` on disjoint pairs, at which
/// every Jensen step of the maximum-entropy bound is tight. Its column
/// marginals are `pi`; it is not symmetric in general.
pub fn jensen_equality_matrix<S: Scalar + Float>(pi: &PartitionMeasure<S>) -> Vec<S> {
    let c = 1usize << pi.k();
    let w = pi.weights();
    let p = pi.pi();
    let mut m = vec![S::zero(); c * c];
    for t in 0..c {
        for u in 0..c {
            if t & u == 0 && w[u] > S::zero() {
                m[t * c + u] = p[t] * p[u] / w[u];
            }
        }
    }
    m
}

/// Slack in the Jensen steps of the maximum-entropy bound:
/// `Σ M(T,T') log( M(T,T') w(T') / (pi(T) pi(T')) )`.
///
/// This is a weighted sum of relative entropies, so it is non-negative for
/// any `M` supported on disjoint pairs with column marginal `pi`; it equals
/// [`max_entropy_check`] when `M` is a valid (symmetric) edge profile and
/// vanishes at [`jensen_equality_matrix`].
pub fn jensen_gap<S: Scalar + Float>(pi: &PartitionMeasure<S>, m: &[S]) -> S {
    let c = 1usize << pi.k();
    let w = pi.weights();
    let p = pi.pi();
    let mut gap = S::zero();
    for t in 0..c {
        for u in 0..c {
            let x = m[t * c + u];
            if x > S::zero() {
                gap = gap + x * (x * w[u] / (p[t] * p[u])).ln();
            }
        }
    }
    gap
}

/// Exponential rate of the first-moment bound: `H(pi) + (d/2) Ĥ(pi)`.
pub fn rate_bound<S: Scalar + Float>(pi: &PartitionMeasure<S>, d: usize) -> S {
    let half_d = S::from_usize_exact(d) / (S::one() + S::one());
    entropy(pi.pi()) + half_d * entropy_hat(pi)
}

/// Comparison of the rate bound with its large-`d` leading term for the
/// symmetric profile `rho_i = alpha_i log(d) / d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticRate {
    /// `binom_sum(alpha) log²(d) / (2d)`.
    pub leading: f64,
    pub rate: f64,
    /// `rate - leading`.
    pub gap: f64,
    /// `C_k log(d) / d` with `C_k = Σ_{T≠∅} beta(T) + (2^k - 1)/e`.
    pub budget: f64,
}

impl AsymptoticRate {
    pub fn within_budget(&self) -> bool {
        self.gap <= self.budget + 1e-12
    }

    /// `C_k` itself.
    pub fn constant(&self, d: usize) -> f64 {
        let d = d as f64;
        self.budget * d / d.ln()
    }
}

/// Evaluates the rate bound, its leading term and the explicit remainder
/// budget. Requires `0 <= alpha_k <= ... <= alpha_1` small enough that the
/// scaled profile is valid, and `d >= 3`.
pub fn asymptotic_rate(alpha: &[f64], d: usize) -> Result<AsymptoticRate> {
    if d < 3 {
        return Err(crate::error::invalid("asymptotic rate needs d >= 3"));
    }
    let k = alpha.len();
    let scale = (d as f64).ln() / d as f64;
    let rho: Vec<f64> = alpha.iter().map(|a| a * scale).collect();
    let pi = rho_to_pi(&DensityProfile::symmetric(&rho)?)?;
    let rate = rate_bound(&pi, d);
    let leading = binom_sum(alpha) * scale * (d as f64).ln() / 2.0;
    let beta = alpha_to_beta(alpha);
    let beta_total: f64 = beta
        .iter()
        .enumerate()
        .map(|(j, b)| crate::special::binomial(k as u64, j as u64 + 1) * b)
        .sum();
    let c_k = beta_total + ((1u64 << k) - 1) as f64 / std::f64::consts::E;
    Ok(AsymptoticRate {
        leading,
        rate,
        gap: rate - leading,
        budget: c_k * scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_and_point_mass() {
        let u = PartitionMeasure::new(3, vec![0.125; 8]).unwrap();
        assert!((entropy(u.pi()) - 3.0 * 2f64.ln()).abs() < 1e-14);
        let mut v = vec![0.0; 8];
        v[5] = 1.0;
        assert_eq!(entropy(&v), 0.0);
    }

    #[test]
    fn hat_entropy_k1() {
        let pi = PartitionMeasure::new(1, vec![0.5, 0.5]).unwrap();
        assert!((entropy_hat(&pi) - 0.5 * 0.5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn forced_k1_edge_profile() {
        // only the (∅,{1}) pairs may carry edges
        let m = EdgeProfile::new(1, vec![0.0, 0.5, 0.5, 0.0]).unwrap();
        let res = max_entropy_check(&m).unwrap();
        // 2 log 2 + (1/2) log(1/2) - log 2
        let by_hand = 0.5 * 2f64.ln();
        assert!((res - by_hand).abs() < 1e-14);
        assert!((jensen_gap(&m.marginal().unwrap(), m.entries()) - res).abs() < 1e-14);
    }

    #[test]
    fn equality_matrix_is_tight() {
        let pi = PartitionMeasure::new(2, vec![0.4, 0.25, 0.2, 0.15]).unwrap();
        let m = jensen_equality_matrix(&pi);
        assert!(jensen_gap(&pi, &m).abs() < 1e-15);
        for u in 0..4 {
            let col: f64 = (0..4).map(|t| m[t * 4 + u]).sum();
            assert!((col - pi.pi()[u]).abs() < 1e-15);
        }
    }

    #[test]
    fn rate_bound_degenerate() {
        let pi = PartitionMeasure::new(2, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(rate_bound(&pi, 10), 0.0);
        let tiny = PartitionMeasure::new(1, vec![1.0 - 1e-12, 1e-12]).unwrap();
        assert!(rate_bound(&tiny, 5).abs() < 1e-9);
    }

    #[test]
    fn asymptotic_zero_and_leading() {
        let z = asymptotic_rate(&[0.0, 0.0], 1000).unwrap();
        assert_eq!((z.leading, z.rate), (0.0, 0.0));
        let a = asymptotic_rate(&[1.0, 1.0], 1000).unwrap();
        let ld = 1000f64.ln();
        assert!((a.leading - ld * ld / 2000.0).abs() < 1e-15);
        assert!(a.within_budget());
    }
}
