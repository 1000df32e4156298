//! Drift Detection Method (Gama et al., 2004).

use serde::{Deserialize, Serialize};

use super::Decision;

pub const DEFAULT_WARNING_LEVEL: f64 = 2.0;
pub const DEFAULT_OUT_CONTROL_LEVEL: f64 = 3.0;

/// Tracks the running error rate `p` and its deviation `s = sqrt(p(1-p)/n)`
/// and fires when `p + s` exceeds `p_min + 3 s_min`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ddm {
    pub min_samples: u64,
    pub warning_level: f64,
    pub out_control_level: f64,
    n: u64,
    p: f64,
    p_min: f64,
    s_min: f64,
    in_change: bool,
}

impl Ddm {
    pub fn new(min_samples: u64) -> Self {
        Ddm {
            min_samples,
            warning_level: DEFAULT_WARNING_LEVEL,
            out_control_level: DEFAULT_OUT_CONTROL_LEVEL,
            n: 0,
            p: 0.0,
            p_min: f64::INFINITY,
            s_min: f64::INFINITY,
            in_change: false,
        }
    }

    pub fn reset(&mut self) {
        *self = Ddm {
            warning_level: self.warning_level,
            out_control_level: self.out_control_level,
            ..Ddm::new(self.min_samples)
        };
    }

    pub fn error_rate(&self) -> f64 {
        self.p
    }

    pub fn update(&mut self, error: bool) -> Decision {
        if self.in_change {
            self.reset();
        }
        self.n += 1;
        self.p += (error as u8 as f64 - self.p) / self.n as f64;
        let s = libm::sqrt(self.p * (1.0 - self.p) / self.n as f64);
        if self.n < self.min_samples {
            return Decision::NoDrift;
        }
        if self.p + s <= self.p_min + self.s_min {
            self.p_min = self.p;
            self.s_min = s;
        }
        let level = self.p + s;
        if level > self.p_min + self.out_control_level * self.s_min {
            self.in_change = true;
            Decision::Drift
        } else if level > self.p_min + self.warning_level * self.s_min {
            Decision::Warning
        } else {
            Decision::NoDrift
        }
    }
}
