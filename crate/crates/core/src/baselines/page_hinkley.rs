//! Page-Hinkley test for an increase of the mean.

use serde::{Deserialize, Serialize};

use super::Decision;

pub const DEFAULT_DELTA: f64 = 0.005;
pub const DEFAULT_THRESHOLD: f64 = 50.0;
pub const DEFAULT_ALPHA: f64 = 1.0 - 1e-4;

/// `m_t = sum_i (x_i - mean_i - delta)` with forgetting factor `alpha`;
/// drift when `m_t - min_t m_t > threshold` after `min_instances` samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageHinkley {
    pub min_instances: u64,
    pub delta: f64,
    pub threshold: f64,
    pub alpha: f64,
    n: u64,
    mean: f64,
    cumsum: f64,
    min_cumsum: f64,
    in_change: bool,
}

impl PageHinkley {
    pub fn new(min_instances: u64) -> Self {
        PageHinkley {
            min_instances,
            delta: DEFAULT_DELTA,
            threshold: DEFAULT_THRESHOLD,
            alpha: DEFAULT_ALPHA,
            n: 0,
            mean: 0.0,
            cumsum: 0.0,
            min_cumsum: 0.0,
            in_change: false,
        }
    }

    pub fn reset(&mut self) {
        self.n = 0;
        self.mean = 0.0;
        self.cumsum = 0.0;
        self.min_cumsum = 0.0;
        self.in_change = false;
    }

    pub fn statistic(&self) -> f64 {
        self.cumsum - self.min_cumsum
    }

    pub fn update(&mut self, error: bool) -> Decision {
        if self.in_change {
            self.reset();
        }
        let x = error as u8 as f64;
        self.n += 1;
        self.mean += (x - self.mean) / self.n as f64;
        self.cumsum = self.alpha * self.cumsum + (x - self.mean - self.delta);
        self.min_cumsum = self.min_cumsum.min(self.cumsum);
        if self.n < self.min_instances {
            return Decision::NoDrift;
        }
        if self.statistic() > self.threshold {
            self.in_change = true;
            Decision::Drift
        } else {
            Decision::NoDrift
        }
    }
}
