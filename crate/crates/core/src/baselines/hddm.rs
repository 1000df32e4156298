//! HDDM_A: Hoeffding-bound drift detection with the average as estimator
//! (Frías-Blanco et al., 2015).

use serde::{Deserialize, Serialize};

use super::Decision;

pub const DEFAULT_WARNING_CONFIDENCE: f64 = 0.005;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HddmA {
    pub drift_confidence: f64,
    pub warning_confidence: f64,
    pub two_sided: bool,
    n_min: f64,
    c_min: f64,
    n_max: f64,
    c_max: f64,
    total_n: f64,
    total_c: f64,
}

impl HddmA {
    pub fn new(drift_confidence: f64) -> Self {
        HddmA {
            drift_confidence,
            warning_confidence: DEFAULT_WARNING_CONFIDENCE.max(drift_confidence),
            two_sided: true,
            n_min: 0.0,
            c_min: 0.0,
            n_max: 0.0,
            c_max: 0.0,
            total_n: 0.0,
            total_c: 0.0,
        }
    }

    pub fn reset(&mut self) {
        self.n_min = 0.0;
        self.c_min = 0.0;
        self.n_max = 0.0;
        self.c_max = 0.0;
        self.total_n = 0.0;
        self.total_c = 0.0;
    }

    fn bound(n: f64, confidence: f64) -> f64 {
        libm::sqrt(libm::log(1.0 / confidence) / (2.0 * n))
    }

    /// Hoeffding test that the mean since the cut point `(c_cut, n_cut)`
    /// moved away from the mean before it, in the direction `sign`.
    fn shifted(&self, c_cut: f64, n_cut: f64, confidence: f64, sign: f64) -> bool {
        if n_cut == self.total_n {
            return false;
        }
        let m = (self.total_n - n_cut) / n_cut / self.total_n;
        let bound = libm::sqrt(m / 2.0 * libm::log(2.0 / confidence));
        sign * (self.total_c / self.total_n - c_cut / n_cut) >= bound
    }

    pub fn update(&mut self, error: bool) -> Decision {
        self.total_n += 1.0;
        self.total_c += error as u8 as f64;
        if self.n_min == 0.0 {
            self.n_min = self.total_n;
            self.c_min = self.total_c;
        }
        if self.n_max == 0.0 {
            self.n_max = self.total_n;
            self.c_max = self.total_c;
        }
        let mean = self.total_c / self.total_n;
        let cur_bound = Self::bound(self.total_n, self.warning_confidence);
        if self.c_min / self.n_min + Self::bound(self.n_min, self.warning_confidence)
            >= mean + cur_bound
        {
            self.c_min = self.total_c;
            self.n_min = self.total_n;
        }
        if self.c_max / self.n_max - Self::bound(self.n_max, self.warning_confidence)
            <= mean - cur_bound
        {
            self.c_max = self.total_c;
            self.n_max = self.total_n;
        }
        let increase = |conf| self.shifted(self.c_min, self.n_min, conf, 1.0);
        let decrease = |conf| self.two_sided && self.shifted(self.c_max, self.n_max, conf, -1.0);
        if increase(self.drift_confidence) || decrease(self.drift_confidence) {
            self.reset();
            Decision::Drift
        } else if increase(self.warning_confidence) || decrease(self.warning_confidence) {
            Decision::Warning
        } else {
            Decision::NoDrift
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn detects_error_increase() {
        let mut d = HddmA::new(1e-4);
        let mut fired = None;
        for i in 0..6000u64 {
            let e = if i < 3000 { i % 10 == 0 } else { i % 2 == 0 };
            if d.update(e) == Decision::Drift {
                fired = Some(i);
                break;
            }
        }
        let at = fired.expect("drift detected");
        assert!((3000..3500).contains(&at), "{at}");
    }

    #[test]
    fn stationary_periodic_stream_is_quiet() {
        let mut d = HddmA::new(1e-4);
        for i in 0..50_000u64 {
            assert_ne!(d.update(i % 5 == 0), Decision::Drift, "at {i}");
        }
    }

    #[test]
    fn one_sided_ignores_improvement() {
        let run = |two_sided: bool| {
            let mut d = HddmA::new(1e-3);
            d.two_sided = two_sided;
            (0..6000u64).any(|i| {
                d.update(if i < 3000 { i % 2 == 0 } else { i % 20 == 0 }) == Decision::Drift
            })
        };
        assert!(run(true));
        assert!(!run(false));
    }
}
