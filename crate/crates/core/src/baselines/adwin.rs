//! ADWIN2 adaptive windowing (Bifet & Gavaldà, 2007) over an exponential
//! bucket histogram.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::Decision;

pub const DEFAULT_DELTA: f64 = 0.002;
pub const DEFAULT_CLOCK: u64 = 32;
pub const DEFAULT_MAX_BUCKETS: usize = 5;
pub const DEFAULT_MIN_SUBWINDOW: u64 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct Bucket {
    total: f64,
    variance: f64,
    len: u64,
}

impl Bucket {
    fn merge(self, other: Bucket) -> Bucket {
        let len = self.len + other.len;
        let d = self.total / self.len as f64 - other.total / other.len as f64;
        Bucket {
            total: self.total + other.total,
            variance: self.variance
                + other.variance
                + (self.len * other.len) as f64 * d * d / len as f64,
            len,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adwin {
    pub delta: f64,
    pub clock: u64,
    pub max_buckets: usize,
    pub min_subwindow: u64,
    /// Level `k` holds buckets of `2^k` elements, newest at the front.
    levels: Vec<VecDeque<Bucket>>,
    width: u64,
    total: f64,
    variance: f64,
    ticks: u64,
}

impl Adwin {
    pub fn new(delta: f64) -> Self {
        Adwin {
            delta,
            clock: DEFAULT_CLOCK,
            max_buckets: DEFAULT_MAX_BUCKETS,
            min_subwindow: DEFAULT_MIN_SUBWINDOW,
            levels: Vec::new(),
            width: 0,
            total: 0.0,
            variance: 0.0,
            ticks: 0,
        }
    }

    pub fn reset(&mut self) {
        self.levels.clear();
        self.width = 0;
        self.total = 0.0;
        self.variance = 0.0;
        self.ticks = 0;
    }

    pub fn width(&self) -> u64 {
        self.width
    }

    pub fn mean(&self) -> f64 {
        if self.width == 0 {
            0.0
        } else {
            self.total / self.width as f64
        }
    }

    fn insert(&mut self, x: f64) {
        if self.width > 0 {
            let d = x - self.total / self.width as f64;
            self.variance += self.width as f64 * d * d / (self.width + 1) as f64;
        }
        self.width += 1;
        self.total += x;
        if self.levels.is_empty() {
            self.levels.push(VecDeque::new());
        }
        self.levels[0].push_front(Bucket {
            total: x,
            variance: 0.0,
            len: 1,
        });
        let mut level = 0;
        while self.levels[level].len() > self.max_buckets {
            let older = self.levels[level].pop_back().expect("level overflow");
            let newer = self.levels[level].pop_back().expect("level overflow");
            if self.levels.len() == level + 1 {
                self.levels.push(VecDeque::new());
            }
            self.levels[level + 1].push_front(newer.merge(older));
            level += 1;
        }
    }

    fn drop_oldest(&mut self) {
        let Some(top) = self.levels.iter().rposition(|l| !l.is_empty()) else {
            return;
        };
        let b = self.levels[top].pop_back().expect("non-empty level");
        let rest = self.width - b.len;
        if rest > 0 {
            let d = b.total / b.len as f64 - (self.total - b.total) / rest as f64;
            self.variance -= b.variance + (b.len * rest) as f64 * d * d / self.width as f64;
        } else {
            self.variance = 0.0;
        }
        self.variance = self.variance.max(0.0);
        self.width = rest;
        self.total -= b.total;
        while self.levels.last().is_some_and(|l| l.is_empty()) {
            self.levels.pop();
        }
    }

    /// Looks for a split of the window into older/newer parts whose means
    /// differ by more than the Bernstein-type cut threshold.
    fn cut_found(&self) -> bool {
        let n = self.width as f64;
        let var = self.variance / n;
        let dd = libm::log(2.0 * libm::log(n) / self.delta);
        let (mut n0, mut u0) = (0u64, 0.0);
        for level in self.levels.iter().rev() {
            for b in level.iter().rev() {
                n0 += b.len;
                u0 += b.total;
                let n1 = self.width - n0;
                if n1 <= self.min_subwindow {
                    return false;
                }
                if n0 <= self.min_subwindow {
                    continue;
                }
                let u1 = self.total - u0;
                let m = 1.0 / (n0 - self.min_subwindow + 1) as f64
                    + 1.0 / (n1 - self.min_subwindow + 1) as f64;
                let eps = libm::sqrt(2.0 * m * var * dd) + 2.0 / 3.0 * dd * m;
                if libm::fabs(u0 / n0 as f64 - u1 / n1 as f64) > eps {
                    return true;
                }
            }
        }
        false
    }

    pub fn update(&mut self, error: bool) -> Decision {
        self.insert(error as u8 as f64);
        self.ticks += 1;
        if !self.ticks.is_multiple_of(self.clock) || self.width <= 2 * self.min_subwindow {
            return Decision::NoDrift;
        }
        let mut changed = false;
        while self.width > 2 * self.min_subwindow && self.cut_found() {
            self.drop_oldest();
            changed = true;
        }
        if changed {
            Decision::Drift
        } else {
            Decision::NoDrift
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn window_statistics_match_direct_computation() {
        let mut d = Adwin::new(0.002);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let xs: Vec<bool> = (0..777).map(|_| rng.gen_bool(0.3)).collect();
        for &x in &xs {
            d.insert(x as u8 as f64);
        }
        let mean = xs.iter().filter(|&&x| x).count() as f64 / xs.len() as f64;
        let var: f64 = xs.iter().map(|&x| (x as u8 as f64 - mean).powi(2)).sum();
        assert_eq!(d.width(), 777);
        assert!((d.mean() - mean).abs() < 1e-12);
        assert!((d.variance - var).abs() < 1e-6);
        let n_buckets: usize = d.levels.iter().map(|l| l.len()).sum();
        assert!(n_buckets < 60);
        assert!(d.levels.iter().all(|l| l.len() <= d.max_buckets));
    }

    #[test]
    fn step_in_error_rate_is_detected_soon_after() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut d = Adwin::new(0.002);
        let mut first = None;
        for i in 0..4000u64 {
            let p = if i < 2000 { 0.1 } else { 0.4 };
            if d.update(rng.gen_bool(p)) == Decision::Drift && first.is_none() {
                first = Some(i);
            }
        }
        let at = first.expect("drift detected");
        assert!((2000..3000).contains(&at), "{at}");
        assert!(d.width() < 2000);
    }

    #[test]
    fn stationary_stream_rarely_fires() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut d = Adwin::new(0.002);
        let fires = (0..20_000)
            .filter(|_| d.update(rng.gen_bool(0.2)) == Decision::Drift)
            .count();
        assert!(fires <= 1, "{fires}");
    }
}
