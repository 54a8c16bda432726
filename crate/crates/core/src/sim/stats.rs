//! Streaming summary statistics and threshold location.

use super::PointStats;

/// Single-pass mean/variance accumulator (Welford's algorithm).
#[derive(Debug, Clone, Default)]
pub struct Accumulator {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Accumulator {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    /// Sample mean; `0.0` when empty.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance; `0.0` with fewer than two samples.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    /// Standard error of the mean; `0.0` with fewer than two samples.
    pub fn stderr(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }
}

/// Midpoint of the first grid interval on which `mean_payoff` changes sign
/// (including a transition off exact zero), scanning points in order and
/// skipping degenerate or non-finite entries. `None` when the mean never
/// changes sign.
pub fn locate_threshold(points: &[PointStats]) -> Option<f64> {
    let usable: Vec<&PointStats> = points
        .iter()
        .filter(|p| !p.degenerate && p.mean_payoff.is_finite())
        .collect();
    for w in usable.windows(2) {
        let (a, b) = (w[0].mean_payoff, w[1].mean_payoff);
        if (a <= 0.0 && b > 0.0) || (a >= 0.0 && b < 0.0) {
            return Some(0.5 * (w[0].s + w[1].s));
        }
    }
    None
}
