//! Log-space helpers for binomial weights at large N.

use statrs::function::factorial::{ln_binomial, ln_factorial};

/// x·ln(y) with the convention 0·ln(0) = 0.
pub(crate) fn xlogy(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * y.ln()
    }
}

pub(crate) fn ln_choose(n: usize, k: usize) -> f64 {
    ln_binomial(n as u64, k as u64)
}

pub(crate) fn ln_fact(n: usize) -> f64 {
    ln_factorial(n as u64)
}

/// ln of the binomial probability C(n,k) p^k (1−p)^{n−k}.
pub(crate) fn ln_binomial_pmf(n: usize, k: usize, p: f64) -> f64 {
    ln_choose(n, k) + xlogy(k as f64, p) + xlogy((n - k) as f64, 1.0 - p)
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

pub(crate) fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut acc = CompensatedSum::default();
    for v in values {
        acc.add(v);
    }
    acc.value()
}
