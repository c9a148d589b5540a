//! Log-factorials and Poisson probabilities.
//!
//! Factorials are accumulated as sums of logarithms rather than through a
//! Stirling or Lanczos approximation, so the counting formulas are exact up to
//! floating-point rounding.

/// Table of `ln(m!)` for `m = 0..=max`, built by accumulation.
#[derive(Debug, Clone)]
pub struct LnFactorial {
    table: Vec<f64>,
}

impl LnFactorial {
    pub fn new(max: usize) -> Self {
        let mut table = Vec::with_capacity(max + 1);
        table.push(0.0);
        let mut acc = 0.0f64;
        for m in 1..=max {
            acc += (m as f64).ln();
            table.push(acc);
        }
        Self { table }
    }

    pub fn max(&self) -> usize {
        self.table.len() - 1
    }

    #[inline]
    pub fn ln_fact(&self, m: u64) -> f64 {
        self.table[m as usize]
    }

    /// `ln((m-1)!!)` for even `m`, via `(m-1)!! = m! / (2^{m/2} (m/2)!)`;
    /// `(-1)!! = 1`.
    pub fn ln_double_fact_odd(&self, m: u64) -> f64 {
        debug_assert!(m % 2 == 0, "double factorial argument must be even");
        if m == 0 {
            return 0.0;
        }
        self.ln_fact(m) - (m / 2) as f64 * std::f64::consts::LN_2 - self.ln_fact(m / 2)
    }

    pub fn ln_binomial(&self, n: u64, k: u64) -> f64 {
        if k > n {
            return f64::NEG_INFINITY;
        }
        self.ln_fact(n) - self.ln_fact(k) - self.ln_fact(n - k)
    }

    /// `ln( total! / prod parts_i! )`; the parts must sum to `total`.
    pub fn ln_multinomial(&self, total: u64, parts: &[u64]) -> f64 {
        debug_assert_eq!(parts.iter().sum::<u64>(), total);
        self.ln_fact(total) - parts.iter().map(|&p| self.ln_fact(p)).sum::<f64>()
    }
}

/// `ln(m!)` by direct accumulation.
pub fn ln_factorial(m: u64) -> f64 {
    (2..=m).map(|i| (i as f64).ln()).sum()
}

/// Exact binomial coefficient as `f64` (exact for results below 2^53).
pub fn binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as f64
}

/// `P(Poisson(lambda) = j)`, computed in log space.
pub fn poisson_pmf(lambda: f64, j: u64) -> f64 {
    if lambda == 0.0 {
        return if j == 0 { 1.0 } else { 0.0 };
    }
    (-lambda + j as f64 * lambda.ln() - ln_factorial(j)).exp()
}

/// `P(Poisson(lambda) <= d)`.
pub fn poisson_cdf(lambda: f64, d: u64) -> f64 {
    if lambda == 0.0 {
        return 1.0;
    }
    // The upper tail is summed directly when it is the smaller side, to
    // avoid cancellation in 1 - cdf.
    if (d as f64) > lambda {
        1.0 - poisson_upper_tail(lambda, d)
    } else {
        let mut pmf = (-lambda).exp();
        let mut acc = pmf;
        for j in 1..=d {
            pmf *= lambda / j as f64;
            acc += pmf;
        }
        acc.min(1.0)
    }
}

/// `P(Poisson(lambda) > d)`, summed term by term above `d`.
pub fn poisson_upper_tail(lambda: f64, d: u64) -> f64 {
    if lambda == 0.0 {
        return 0.0;
    }
    if (d as f64) < lambda {
        // lower side is small here
        let mut pmf = (-lambda).exp();
        let mut acc = pmf;
        for j in 1..=d {
            pmf *= lambda / j as f64;
            acc += pmf;
        }
        return (1.0 - acc).max(0.0);
    }
    let mut pmf = poisson_pmf(lambda, d + 1);
    let mut acc = 0.0;
    let mut j = d + 1;
    loop {
        acc += pmf;
        j += 1;
        pmf *= lambda / j as f64;
        if pmf < acc * 1e-18 || pmf == 0.0 {
            break;
        }
    }
    acc
}
