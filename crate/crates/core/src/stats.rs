//! Replica reductions and Monte Carlo estimates.

use serde::{Deserialize, Serialize};

/// Mean and standard error of a replicated Monte Carlo quantity, with the
/// discretization that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MCEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub replicas: usize,
    pub dt: f64,
    pub h: f64,
    pub seed: u64,
}

impl MCEstimate {
    /// Reduces replica values in index order. `std_error` is the sample
    /// standard deviation over `sqrt(replicas)`, infinite below two replicas.
    pub fn from_samples(samples: &[f64], dt: f64, h: f64, seed: u64) -> Self {
        let moments = Moments::from_slice(samples);
        MCEstimate {
            mean: moments.mean(),
            std_error: moments.std_error(),
            replicas: samples.len(),
            dt,
            h,
            seed,
        }
    }

    /// z-score of the difference between two independent estimates.
    pub fn z_score(&self, other: &MCEstimate) -> f64 {
        let se = self.std_error.hypot(other.std_error);
        if se == 0.0 {
            if self.mean == other.mean {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.mean - other.mean) / se
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        MCEstimate {
            mean: self.mean * factor,
            std_error: self.std_error * factor.abs(),
            ..*self
        }
    }
}

/// Sum / sum-of-squares / count reduction.
///
/// Accumulation uses Welford updates; callers feed values in replica-index
/// order so the floating-point result does not depend on scheduling.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    count: usize,
    mean: f64,
    m2: f64,
}

impl Moments {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_slice(values: &[f64]) -> Self {
        let mut m = Moments::new();
        for &v in values {
            m.push(v);
        }
        m
    }

    pub fn push(&mut self, value: f64) {
        self.count += 1;
        let delta = value - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (value - self.mean);
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            f64::NAN
        } else {
            self.mean
        }
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            f64::INFINITY
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn std_dev(&self) -> f64 {
        self.variance().sqrt()
    }

    pub fn std_error(&self) -> f64 {
        if self.count < 2 {
            f64::INFINITY
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }
}

/// Linear-interpolated quantile of already sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}
