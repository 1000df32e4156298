//! Global drift detectors used as comparison points. Streaming detectors
//! consume the per-instance error indicator; the contingency detectors
//! compare per-batch error counts of a frozen reference window against a
//! sliding current window.

pub mod adwin;
pub mod contingency;
pub mod ddm;
pub mod hddm;
pub mod kswin;
pub mod page_hinkley;

use alloc::collections::VecDeque;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

pub use adwin::Adwin;
pub use contingency::{chi2_statistic, chi2_test, fisher_exact, Alternative, Table2x2, TestUsed};
pub use ddm::Ddm;
pub use hddm::HddmA;
pub use kswin::Kswin;
pub use page_hinkley::PageHinkley;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    NoDrift,
    Warning,
    Drift,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    Ddm,
    HddmA,
    PageHinkley,
    Adwin,
    Kswin,
    Chi2,
    Fet,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 7] = [
        BaselineKind::Chi2,
        BaselineKind::Adwin,
        BaselineKind::Ddm,
        BaselineKind::Fet,
        BaselineKind::HddmA,
        BaselineKind::Kswin,
        BaselineKind::PageHinkley,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BaselineKind::Ddm => "ddm",
            BaselineKind::HddmA => "hddm_a",
            BaselineKind::PageHinkley => "page_hinkley",
            BaselineKind::Adwin => "adwin",
            BaselineKind::Kswin => "kswin",
            BaselineKind::Chi2 => "chi2",
            BaselineKind::Fet => "fet",
        }
    }

    /// Hyperparameter grid swept for this detector.
    pub fn grid(self, window_batches: usize) -> Vec<BaselineConfig> {
        match self {
            BaselineKind::Ddm => [500, 1000, 2000, 4000, 8000]
                .map(|w| BaselineConfig::Ddm { min_samples: w })
                .to_vec(),
            BaselineKind::HddmA => [0.0001, 0.0005, 0.001, 0.002, 0.004, 0.05, 0.1]
                .map(|e| BaselineConfig::HddmA {
                    drift_confidence: e,
                    two_sided: true,
                })
                .to_vec(),
            BaselineKind::PageHinkley => [500, 1000, 2000, 4000, 8000]
                .map(|l| BaselineConfig::PageHinkley { min_instances: l })
                .to_vec(),
            BaselineKind::Adwin => [0.001, 0.002, 0.004, 0.05, 0.1]
                .map(|d| BaselineConfig::Adwin { delta: d })
                .to_vec(),
            BaselineKind::Kswin => (1..=8)
                .map(|k| BaselineConfig::Kswin {
                    window: 100 * k,
                    seed: 0,
                })
                .collect(),
            BaselineKind::Chi2 => CONTINGENCY_P_GRID
                .map(|p| BaselineConfig::Chi2 {
                    p_value: p,
                    window_batches,
                })
                .to_vec(),
            BaselineKind::Fet => CONTINGENCY_P_GRID
                .map(|p| BaselineConfig::Fet {
                    p_value: p,
                    window_batches,
                    alternative: Alternative::TwoSided,
                })
                .to_vec(),
        }
    }
}

/// Significance levels swept for the contingency detectors.
pub const CONTINGENCY_P_GRID: [f64; 5] = [0.001, 0.005, 0.01, 0.05, 0.1];

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BaselineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s
            .chars()
            .filter(|c| *c != '-' && *c != '_')
            .collect::<String>()
            .to_ascii_lowercase();
        Ok(match norm.as_str() {
            "ddm" => BaselineKind::Ddm,
            "hddm" | "hddma" => BaselineKind::HddmA,
            "ph" | "pagehinkley" => BaselineKind::PageHinkley,
            "adwin" => BaselineKind::Adwin,
            "kswin" => BaselineKind::Kswin,
            "chi2" | "chisquare" => BaselineKind::Chi2,
            "fet" | "fisher" => BaselineKind::Fet,
            _ => return Err(Error::InvalidParameter(format!("unknown detector `{s}`"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BaselineConfig {
    Ddm {
        min_samples: u64,
    },
    HddmA {
        drift_confidence: f64,
        two_sided: bool,
    },
    PageHinkley {
        min_instances: u64,
    },
    Adwin {
        delta: f64,
    },
    Kswin {
        window: usize,
        seed: u64,
    },
    Chi2 {
        p_value: f64,
        window_batches: usize,
    },
    Fet {
        p_value: f64,
        window_batches: usize,
        alternative: Alternative,
    },
}

impl BaselineConfig {
    pub fn kind(&self) -> BaselineKind {
        match self {
            BaselineConfig::Ddm { .. } => BaselineKind::Ddm,
            BaselineConfig::HddmA { .. } => BaselineKind::HddmA,
            BaselineConfig::PageHinkley { .. } => BaselineKind::PageHinkley,
            BaselineConfig::Adwin { .. } => BaselineKind::Adwin,
            BaselineConfig::Kswin { .. } => BaselineKind::Kswin,
            BaselineConfig::Chi2 { .. } => BaselineKind::Chi2,
            BaselineConfig::Fet { .. } => BaselineKind::Fet,
        }
    }

    /// Short `name(param)` label.
    pub fn label(&self) -> String {
        match self {
            BaselineConfig::Ddm { min_samples } => format!("ddm(W={min_samples})"),
            BaselineConfig::HddmA {
                drift_confidence, ..
            } => format!("hddm_a(eps={drift_confidence})"),
            BaselineConfig::PageHinkley { min_instances } => {
                format!("page_hinkley(lambda={min_instances})")
            }
            BaselineConfig::Adwin { delta } => format!("adwin(delta={delta})"),
            BaselineConfig::Kswin { window, .. } => format!("kswin(W={window})"),
            BaselineConfig::Chi2 { p_value, .. } => format!("chi2(p={p_value})"),
            BaselineConfig::Fet { p_value, .. } => format!("fet(p={p_value})"),
        }
    }

    /// The same configuration with a different random seed (only KSWIN
    /// draws random numbers).
    pub fn with_seed(self, seed: u64) -> Self {
        match self {
            BaselineConfig::Kswin { window, .. } => BaselineConfig::Kswin { window, seed },
            other => other,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(format!("{}: {m}", self.label())));
        match *self {
            BaselineConfig::HddmA {
                drift_confidence: c,
                ..
            } if !(c > 0.0 && c < 1.0) => bad("confidence must lie in (0, 1)"),
            BaselineConfig::Adwin { delta } if !(delta > 0.0 && delta < 1.0) => {
                bad("delta must lie in (0, 1)")
            }
            BaselineConfig::Kswin { window, .. } if window < 2 * kswin::DEFAULT_STAT_SIZE => {
                bad("window must hold at least twice the statistic window")
            }
            BaselineConfig::Chi2 {
                p_value,
                window_batches,
            }
            | BaselineConfig::Fet {
                p_value,
                window_batches,
                ..
            } if !(p_value > 0.0 && p_value < 1.0) || window_batches == 0 => {
                bad("p-value must lie in (0, 1) and the window must be non-empty")
            }
            _ => Ok(()),
        }
    }
}

/// Contingency test between a frozen reference and a sliding window of
/// per-batch error counts. The window layout matches the subgroup monitor:
/// the first `window_batches` batches form the reference and the test runs
/// once the current window is full.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowTest {
    pub p_value: f64,
    pub window_batches: usize,
    pub test: WindowTestKind,
    reference: Option<(u64, u64)>,
    pending: (u64, u64),
    pending_batches: usize,
    ring: VecDeque<(u64, u64)>,
    last_p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowTestKind {
    Chi2,
    Fisher(Alternative),
}

impl WindowTest {
    pub fn new(test: WindowTestKind, p_value: f64, window_batches: usize) -> Self {
        WindowTest {
            p_value,
            window_batches,
            test,
            reference: None,
            pending: (0, 0),
            pending_batches: 0,
            ring: VecDeque::with_capacity(window_batches + 1),
            last_p: 1.0,
        }
    }

    pub fn reset(&mut self) {
        *self = WindowTest::new(self.test, self.p_value, self.window_batches);
    }

    pub fn last_p_value(&self) -> f64 {
        self.last_p
    }

    /// Feeds one batch given as `(errors, correct)` counts.
    pub fn update_counts(&mut self, errors: u64, correct: u64) -> Decision {
        let Some((ref_err, ref_ok)) = self.reference else {
            self.pending.0 += errors;
            self.pending.1 += correct;
            self.pending_batches += 1;
            if self.pending_batches >= self.window_batches {
                self.reference = Some(self.pending);
            }
            return Decision::NoDrift;
        };
        self.ring.push_back((errors, correct));
        if self.ring.len() > self.window_batches {
            self.ring.pop_front();
        }
        if self.ring.len() < self.window_batches {
            return Decision::NoDrift;
        }
        let (cur_err, cur_ok) = self
            .ring
            .iter()
            .fold((0, 0), |(e, c), &(de, dc)| (e + de, c + dc));
        let table = Table2x2::new(ref_err, ref_ok, cur_err, cur_ok);
        self.last_p = match self.test {
            WindowTestKind::Chi2 => chi2_test(&table).0,
            WindowTestKind::Fisher(alt) => fisher_exact(&table, alt),
        };
        if self.last_p < self.p_value {
            Decision::Drift
        } else {
            Decision::NoDrift
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BaselineDetector {
    Ddm(Ddm),
    HddmA(HddmA),
    PageHinkley(PageHinkley),
    Adwin(Adwin),
    Kswin(Kswin),
    Window(WindowTest),
}

impl BaselineDetector {
    pub fn new(config: &BaselineConfig) -> Result<Self> {
        config.validate()?;
        Ok(match *config {
            BaselineConfig::Ddm { min_samples } => BaselineDetector::Ddm(Ddm::new(min_samples)),
            BaselineConfig::HddmA {
                drift_confidence,
                two_sided,
            } => {
                let mut d = HddmA::new(drift_confidence);
                d.two_sided = two_sided;
                BaselineDetector::HddmA(d)
            }
            BaselineConfig::PageHinkley { min_instances } => {
                BaselineDetector::PageHinkley(PageHinkley::new(min_instances))
            }
            BaselineConfig::Adwin { delta } => BaselineDetector::Adwin(Adwin::new(delta)),
            BaselineConfig::Kswin { window, seed } => {
                BaselineDetector::Kswin(Kswin::new(window, seed))
            }
            BaselineConfig::Chi2 {
                p_value,
                window_batches,
            } => BaselineDetector::Window(WindowTest::new(
                WindowTestKind::Chi2,
                p_value,
                window_batches,
            )),
            BaselineConfig::Fet {
                p_value,
                window_batches,
                alternative,
            } => BaselineDetector::Window(WindowTest::new(
                WindowTestKind::Fisher(alternative),
                p_value,
                window_batches,
            )),
        })
    }

    pub fn reset(&mut self) {
        match self {
            BaselineDetector::Ddm(d) => d.reset(),
            BaselineDetector::HddmA(d) => d.reset(),
            BaselineDetector::PageHinkley(d) => d.reset(),
            BaselineDetector::Adwin(d) => d.reset(),
            BaselineDetector::Kswin(d) => d.reset(),
            BaselineDetector::Window(d) => d.reset(),
        }
    }

    /// Feeds one instance to a streaming detector. Window tests only see
    /// whole batches and return `NoDrift` here.
    pub fn update(&mut self, error: bool) -> Decision {
        match self {
            BaselineDetector::Ddm(d) => d.update(error),
            BaselineDetector::HddmA(d) => d.update(error),
            BaselineDetector::PageHinkley(d) => d.update(error),
            BaselineDetector::Adwin(d) => d.update(error),
            BaselineDetector::Kswin(d) => d.update(error),
            BaselineDetector::Window(_) => Decision::NoDrift,
        }
    }

    /// Feeds one batch of per-instance error flags and returns the most
    /// severe decision taken while consuming it.
    pub fn update_batch(&mut self, errors: &[bool]) -> Decision {
        match self {
            BaselineDetector::Window(w) => {
                let e = errors.iter().filter(|&&e| e).count() as u64;
                w.update_counts(e, errors.len() as u64 - e)
            }
            _ => errors
                .iter()
                .fold(Decision::NoDrift, |acc, &e| acc.max(self.update(e))),
        }
    }

    /// Feeds one batch summarized as `(errors, total)`; streaming detectors
    /// receive the errors first, in arbitrary but fixed order.
    pub fn update_batch_counts(&mut self, errors: u64, total: u64) -> Decision {
        match self {
            BaselineDetector::Window(w) => w.update_counts(errors, total - errors),
            _ => (0..total).fold(Decision::NoDrift, |acc, i| acc.max(self.update(i < errors))),
        }
    }
}
