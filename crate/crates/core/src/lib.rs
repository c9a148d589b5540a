//! Factor-of-i.i.d. independent sets on random regular graphs, Erdős–Rényi
//! graphs and Galton–Watson trees: samplers, local rules, couplings, exact
//! first-moment calculus and the tree-to-PGW transfer.

pub mod coupling;
pub mod error;
pub mod factor;
pub mod graph;
pub mod pgw;
pub mod profiles;
pub mod rng;
pub mod scalar;
pub mod special;
pub mod stats;

pub use error::{Error, Result};

use num_rational::Ratio;

/// Density profile over `f64`.
pub type DensityProfileF64 = profiles::DensityProfile<f64>;
/// Density profile over exact rationals.
pub type DensityProfileExact = profiles::DensityProfile<Ratio<i64>>;
pub type PartitionMeasureF64 = profiles::PartitionMeasure<f64>;
pub type PartitionMeasureExact = profiles::PartitionMeasure<Ratio<i64>>;
pub type EdgeProfileF64 = profiles::EdgeProfile<f64>;
pub type EdgeProfileExact = profiles::EdgeProfile<Ratio<i64>>;
