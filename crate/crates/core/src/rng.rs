//! Counter-based randomness.
//!
//! Every random quantity in the toolkit is a pure function of a 64-bit seed
//! and a small tuple of integer coordinates (trial, vertex key, copy index,
//! purpose tag). Sequential generators are only used inside a single sampler
//! call and are themselves seeded this way, so results never depend on
//! scheduling or worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finaliser.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hash of a seed and one coordinate.
#[inline]
pub fn hash2(seed: u64, a: u64) -> u64 {
    mix64(seed ^ mix64(a.wrapping_mul(GOLDEN) ^ 0x5851_F42D_4C95_7F2D))
}

/// Hash of a seed and two coordinates.
#[inline]
pub fn hash3(seed: u64, a: u64, b: u64) -> u64 {
    hash2(hash2(seed, a), b)
}

/// Maps 64 random bits to a uniform double in `[0, 1)` on the 2^-53 grid.
#[inline]
pub fn unit_f64(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Purpose tags keep the streams drawn from one seed disjoint.
pub mod tag {
    pub const STRUCTURE: u64 = 0x5354_5255;
    pub const OFFSPRING: u64 = 0x4F46_4653;
    pub const LABEL: u64 = 0x4C41_4245;
    pub const SUBSET: u64 = 0x5355_4253;
    pub const COPY: u64 = 0x434F_5059;
    pub const TRIAL: u64 = 0x5452_4941;
    pub const EDGES: u64 = 0x4544_4745;
    pub const INNER: u64 = 0x494E_4E45;
    pub const ROOT: u64 = 0x524F_4F54;
}

/// Derives an independent child seed.
#[inline]
pub fn derive(seed: u64, tag: u64, index: u64) -> u64 {
    hash3(seed, tag, index)
}

/// A sequential generator for one sampler invocation.
pub fn chacha(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A vertex label: 64 uniform bits read as the dyadic rational `bits / 2^64`
/// in `[0, 1)`.
///
/// Ties between labels have probability `2^-64` per pair; comparisons that
/// must be strict go through [`cmp_labels`], which breaks them by the vertex
/// key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Label(pub u64);

impl Label {
    pub fn value(self) -> f64 {
        unit_f64(self.0)
    }
}

/// Strict total order on `(label, key)` pairs.
#[inline]
pub fn cmp_labels(a: (Label, u64), b: (Label, u64)) -> Ordering {
    a.0.cmp(&b.0).then(a.1.cmp(&b.1))
}

/// Assignment of labels to vertex keys.
pub trait Labelling: Sync {
    fn label(&self, key: u64) -> Label;
}

impl Labelling for [Label] {
    fn label(&self, key: u64) -> Label {
        self[key as usize]
    }
}

impl Labelling for Vec<Label> {
    fn label(&self, key: u64) -> Label {
        self[key as usize]
    }
}

impl<L: Labelling + ?Sized> Labelling for &L {
    fn label(&self, key: u64) -> Label {
        (**self).label(key)
    }
}

/// Membership in a Bernoulli(p) percolation, as a pure function of the key.
///
/// Uses the threshold form `U(key) < p`, so the sets are nested in `p` for a
/// fixed seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Percolation {
    pub seed: u64,
    pub p: f64,
}

impl Percolation {
    pub fn new(seed: u64, p: f64) -> Self {
        Self { seed, p }
    }

    #[inline]
    pub fn contains(&self, key: u64) -> bool {
        if self.p <= 0.0 {
            return false;
        }
        if self.p >= 1.0 {
            return true;
        }
        unit_f64(hash3(self.seed, tag::SUBSET, key)) < self.p
    }
}

/// An i.i.d. labelling `X_0`, optionally re-randomised on a percolated set:
/// `Y(v) = X_copy(v)` for `v ∈ S` and `X_0(v)` otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelScheme {
    pub base: u64,
    pub resample: Option<(Percolation, u64)>,
}

impl LabelScheme {
    pub fn iid(seed: u64) -> Self {
        Self {
            base: seed,
            resample: None,
        }
    }

    /// Copy `copy_seed` of the coupled family built on `subset`.
    pub fn coupled(base: u64, subset: Percolation, copy_seed: u64) -> Self {
        Self {
            base,
            resample: Some((subset, copy_seed)),
        }
    }
}

impl Labelling for LabelScheme {
    #[inline]
    fn label(&self, key: u64) -> Label {
        match self.resample {
            Some((s, copy)) if s.contains(key) => Label(hash3(copy, tag::LABEL, key)),
            _ => Label(hash3(self.base, tag::LABEL, key)),
        }
    }
}

/// Inverse-CDF Poisson draw from 64 uniform bits.
pub fn poisson_from_bits(lambda: f64, bits: u64) -> u32 {
    let u = unit_f64(bits);
    let mut k = 0u32;
    let mut pmf = (-lambda).exp();
    let mut cdf = pmf;
    while u >= cdf {
        k += 1;
        pmf *= lambda / k as f64;
        let next = cdf + pmf;
        if next == cdf {
            // remaining mass below f64 resolution
            break;
        }
        cdf = next;
    }
    k
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hashes_are_deterministic_and_spread() {
        assert_eq!(hash3(1, 2, 3), hash3(1, 2, 3));
        assert_ne!(hash3(1, 2, 3), hash3(1, 3, 2));
        assert_ne!(hash2(0, 0), hash2(0, 1));
    }

    #[test]
    fn unit_is_in_range() {
        assert_eq!(unit_f64(0), 0.0);
        assert!(unit_f64(u64::MAX) < 1.0);
    }

    #[test]
    fn percolation_endpoints_and_nesting() {
        for key in 0..1000 {
            assert!(!Percolation::new(7, 0.0).contains(key));
            assert!(Percolation::new(7, 1.0).contains(key));
            if Percolation::new(7, 0.3).contains(key) {
                assert!(Percolation::new(7, 0.6).contains(key));
            }
        }
    }

    #[test]
    fn coupled_labels_agree_off_the_subset() {
        let s = Percolation::new(3, 0.5);
        let a = LabelScheme::coupled(11, s, 21);
        let b = LabelScheme::coupled(11, s, 22);
        let base = LabelScheme::iid(11);
        for key in 0..200 {
            if s.contains(key) {
                assert_ne!(a.label(key), b.label(key));
            } else {
                assert_eq!(a.label(key), base.label(key));
                assert_eq!(b.label(key), base.label(key));
            }
        }
    }

    #[test]
    fn label_ties_broken_by_key() {
        assert_eq!(cmp_labels((Label(5), 1), (Label(5), 2)), Ordering::Less);
        assert_eq!(cmp_labels((Label(4), 9), (Label(5), 2)), Ordering::Less);
    }

    #[test]
    fn poisson_inverse_cdf_mean() {
        let n = 200_000u64;
        let total: u64 = (0..n)
            .map(|i| poisson_from_bits(3.0, hash2(99, i)) as u64)
            .sum();
        let mean = total as f64 / n as f64;
        let se = (3.0 / n as f64).sqrt();
        assert!((mean - 3.0).abs() < 4.0 * se, "mean {mean}");
    }
}
