//! Kolmogorov-Smirnov windowing (Raab et al., 2020).

use alloc::collections::VecDeque;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::Decision;
use crate::seed::splitmix64;

pub const DEFAULT_ALPHA: f64 = 0.005;
pub const DEFAULT_STAT_SIZE: usize = 30;
pub const DEFAULT_WINDOW: usize = 100;
/// Minimum KS statistic accompanying a significant p-value.
pub const MIN_STATISTIC: f64 = 0.1;

/// Two-sample KS statistic `sup |F_a - F_b|`.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(|x, y| x.partial_cmp(y).unwrap_or(Ordering::Equal));
    b.sort_by(|x, y| x.partial_cmp(y).unwrap_or(Ordering::Equal));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let v = if a[i] <= b[j] { a[i] } else { b[j] };
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max(libm::fabs(i as f64 / na - j as f64 / nb));
    }
    d
}

/// Exact two-sided p-value of the KS statistic `d` for two samples of
/// equal size `n`: `P(D >= d)` from the reflection formula
/// `2 sum_{k>=1} (-1)^(k-1) C(2n, n-kh) / C(2n, n)` with `h = round(d n)`.
pub fn ks_pvalue_equal(n: usize, d: f64) -> f64 {
    let h = libm::round(d * n as f64) as usize;
    if h == 0 {
        return 1.0;
    }
    if h > n {
        return 0.0;
    }
    // Horner form over k, each factor the ratio C(2n, n-(k+1)h) / C(2n, n-kh).
    let mut p = 0.0;
    for k in (0..=n / h).rev() {
        let mut ratio = 1.0;
        for j in 0..h {
            let num = n as f64 - (k * h) as f64 - j as f64;
            ratio *= num.max(0.0) / (n + k * h + j + 1) as f64;
        }
        p = ratio * (1.0 - p);
    }
    (2.0 * p).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Kswin {
    pub window_size: usize,
    pub stat_size: usize,
    pub alpha: f64,
    pub seed: u64,
    window: VecDeque<f64>,
    rng_state: u64,
    last_p: f64,
}

impl Kswin {
    pub fn new(window_size: usize, seed: u64) -> Self {
        Kswin {
            window_size,
            stat_size: DEFAULT_STAT_SIZE.min(window_size / 2).max(1),
            alpha: DEFAULT_ALPHA,
            seed,
            window: VecDeque::with_capacity(window_size + 1),
            rng_state: seed,
            last_p: 1.0,
        }
    }

    pub fn reset(&mut self) {
        self.window.clear();
        self.rng_state = self.seed;
        self.last_p = 1.0;
    }

    /// Uniform index below `bound` from a splitmix64 counter stream.
    fn draw_index(&mut self, bound: usize) -> usize {
        self.rng_state = self.rng_state.wrapping_add(1);
        ((splitmix64(self.rng_state) as u128 * bound as u128) >> 64) as usize
    }

    pub fn p_value(&self) -> f64 {
        self.last_p
    }

    pub fn update(&mut self, error: bool) -> Decision {
        let mut decision = Decision::NoDrift;
        if self.window.len() >= self.window_size {
            self.window.pop_front();
            let r = self.stat_size;
            let old = self.window.len() - r;
            let picks: Vec<usize> = (0..r).map(|_| self.draw_index(old)).collect();
            let sample: Vec<f64> = picks.iter().map(|&k| self.window[k]).collect();
            let recent: Vec<f64> = self.window.iter().skip(old).copied().collect();
            let d = ks_statistic(&sample, &recent);
            self.last_p = ks_pvalue_equal(r, d);
            if self.last_p <= self.alpha && d > MIN_STATISTIC {
                decision = Decision::Drift;
                self.window.drain(..old);
            }
        }
        self.window.push_back(error as u8 as f64);
        decision
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn statistic_of_binary_samples() {
        let a = [0.0, 0.0, 1.0, 1.0];
        let b = [0.0, 1.0, 1.0, 1.0];
        assert!((ks_statistic(&a, &b) - 0.25).abs() < 1e-15);
        assert_eq!(ks_statistic(&a, &a), 0.0);
    }

    /// Brute-force P(D >= h/n) by enumerating all C(2n, n) lattice paths.
    fn brute_pvalue(n: usize, h: usize) -> f64 {
        let mut hit = 0u64;
        let mut total = 0u64;
        for mask in 0u32..(1 << (2 * n)) {
            if mask.count_ones() as usize != n {
                continue;
            }
            total += 1;
            let mut diff: i64 = 0;
            let mut worst = 0;
            for k in 0..2 * n {
                diff += if mask >> k & 1 == 1 { 1 } else { -1 };
                worst = worst.max(diff.unsigned_abs() as usize);
            }
            if worst >= h {
                hit += 1;
            }
        }
        hit as f64 / total as f64
    }

    #[test]
    fn exact_pvalue_matches_path_enumeration() {
        for n in 1..=8 {
            for h in 1..=n {
                let p = ks_pvalue_equal(n, h as f64 / n as f64);
                assert!((p - brute_pvalue(n, h)).abs() < 1e-12, "n={n} h={h}");
            }
        }
        assert_eq!(ks_pvalue_equal(10, 0.0), 1.0);
    }

    #[test]
    fn error_jump_triggers_and_shrinks_window() {
        let mut d = Kswin::new(100, 3);
        let fired = (0..2000u64).position(|i| {
            d.update(if i < 1000 { i % 10 == 0 } else { i % 10 < 8 }) == Decision::Drift
        });
        let at = fired.expect("drift detected");
        assert!((1000..1100).contains(&at), "{at}");
    }

    #[test]
    fn reset_replays_identically() {
        let input: Vec<bool> = (0..3000u64)
            .map(|i| (i * 7919 % 13) < if i < 1500 { 2 } else { 9 })
            .collect();
        let mut d = Kswin::new(200, 9);
        let first: Vec<Decision> = input.iter().map(|&e| d.update(e)).collect();
        d.reset();
        let second: Vec<Decision> = input.iter().map(|&e| d.update(e)).collect();
        assert_eq!(first, second);
    }
}
