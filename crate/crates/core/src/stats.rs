//! Streaming Monte Carlo aggregation and deterministic parallel trial loops.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Running mean and second central moment (Welford), mergeable across
/// batches with Chan's update.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Accumulator {
    pub count: u64,
    pub mean: f64,
    pub m2: f64,
}

impl Accumulator {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Accumulator) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let delta = other.mean - self.mean;
        self.mean += delta * other.count as f64 / n;
        self.m2 += other.m2 + delta * delta * self.count as f64 * other.count as f64 / n;
        self.count += other.count;
    }

    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.m2 / (self.count - 1) as f64).max(0.0)
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }

    pub fn estimate(&self) -> Estimate {
        Estimate {
            mean: self.mean,
            std_error: self.std_error(),
            samples: self.count,
        }
    }
}

/// A Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: u64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self {
            mean: value,
            std_error: 0.0,
            samples: 0,
        }
    }

    /// `|self - other| <= z * sqrt(se_1^2 + se_2^2)`, with a floor for exact
    /// agreement.
    pub fn agrees_with(&self, other: &Estimate, z: f64) -> bool {
        let se = self.std_error.hypot(other.std_error);
        (self.mean - other.mean).abs() <= z * se + 1e-12
    }

    pub fn within(&self, value: f64, z: f64) -> bool {
        (self.mean - value).abs() <= z * self.std_error + 1e-12
    }
}

/// Trials per work item. Fixed so the merge tree does not depend on the pool.
pub const BATCH: u64 = 256;

/// Runs `trials` independent trials in parallel and folds each batch into a
/// per-batch state with `fold`; batch states are merged in batch order.
///
/// `make` creates an empty state, `fold(state, trial_index)` consumes one
/// trial, `merge(acc, batch)` combines. The result is identical for any
/// thread count.
pub fn run_trials<S, M, F, G>(trials: u64, make: M, fold: F, merge: G) -> S
where
    S: Send,
    M: Fn() -> S + Sync,
    F: Fn(&mut S, u64) + Sync,
    G: Fn(&mut S, S),
{
    let batches = trials.div_ceil(BATCH);
    let parts: Vec<S> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut state = make();
            let end = ((b + 1) * BATCH).min(trials);
            for t in b * BATCH..end {
                fold(&mut state, t);
            }
            state
        })
        .collect();
    let mut total = make();
    for part in parts {
        merge(&mut total, part);
    }
    total
}

/// Vector of accumulators, merged element-wise.
pub fn merge_all(into: &mut [Accumulator], from: &[Accumulator]) {
    for (a, b) in into.iter_mut().zip(from) {
        a.merge(b);
    }
}
