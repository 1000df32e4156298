//! Reference/current windows and the per-subgroup drift test.
//!
//! Observed outcome counts of a subgroup give a Beta(alpha + 1, beta + 1)
//! posterior over its true performance. Two windows are compared with a
//! Welch statistic on the posterior means and variances; a subgroup drifts
//! when the statistic exceeds `tau_t`, and the stream drifts when any
//! subgroup (the global one included) does.

use alloc::collections::VecDeque;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sgmetrics::{performance, SubgroupStats};

pub const DEFAULT_TAU_T: f64 = 5.0;
pub const DEFAULT_WINDOW_BATCHES: usize = 5;

/// Mean and variance of a Beta posterior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Posterior {
    pub mu: f64,
    pub nu: f64,
}

/// Posterior of the performance ratio after `alpha` positive and `beta`
/// negative outcomes under a uniform prior.
pub fn beta_posterior(alpha: u64, beta: u64) -> Posterior {
    let a = alpha as f64 + 1.0;
    let b = beta as f64 + 1.0;
    let s = a + b;
    Posterior {
        mu: a / s,
        nu: a * b / (s * s * (s + 1.0)),
    }
}

/// `|mu_r - mu_c| / sqrt(nu_r + nu_c)`.
pub fn welch_t(reference: Posterior, current: Posterior) -> f64 {
    libm::fabs(reference.mu - current.mu) / libm::sqrt(reference.nu + current.nu)
}

/// `h_ref - h_cur` for subgroup `j`, `None` if either side has no outcome.
pub fn drift_delta(reference: &SubgroupStats, current: &SubgroupStats, j: usize) -> Option<f64> {
    Some(reference.performance(j)? - current.performance(j)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferencePolicy {
    /// The first `window_batches` batches form a frozen reference.
    #[default]
    FixedFirst,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowConfig {
    pub window_batches: usize,
    pub reference_policy: ReferencePolicy,
}

impl Default for WindowConfig {
    fn default() -> Self {
        WindowConfig {
            window_batches: DEFAULT_WINDOW_BATCHES,
            reference_policy: ReferencePolicy::FixedFirst,
        }
    }
}

impl WindowConfig {
    pub fn new(window_batches: usize) -> Result<Self> {
        if window_batches == 0 {
            return Err(Error::InvalidParameter(
                "window must hold at least one batch".into(),
            ));
        }
        Ok(WindowConfig {
            window_batches,
            ..Default::default()
        })
    }
}

/// Drift measurements for one subgroup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubgroupDrift {
    pub subgroup: usize,
    pub h_ref: Option<f64>,
    pub h_cur: Option<f64>,
    pub delta_h: Option<f64>,
    pub mu_ref: f64,
    pub mu_cur: f64,
    pub nu_ref: f64,
    pub nu_cur: f64,
    pub t_value: f64,
    pub drifted: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportStatus {
    /// Reference or current window not yet complete; nothing is scored.
    WarmingUp,
    Ready,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    pub batch_id: u64,
    pub status: ReportStatus,
    pub global_drift: bool,
    pub records: Vec<SubgroupDrift>,
}

impl DriftReport {
    fn warming_up(batch_id: u64) -> Self {
        DriftReport {
            batch_id,
            status: ReportStatus::WarmingUp,
            global_drift: false,
            records: Vec::new(),
        }
    }

    pub fn is_ready(&self) -> bool {
        self.status == ReportStatus::Ready
    }

    pub fn record(&self, subgroup: usize) -> Option<&SubgroupDrift> {
        self.records.iter().find(|r| r.subgroup == subgroup)
    }

    pub fn n_drifted(&self) -> usize {
        self.records.iter().filter(|r| r.drifted).count()
    }

    pub fn max_t(&self) -> f64 {
        self.records.iter().map(|r| r.t_value).fold(0.0, f64::max)
    }

    /// Keeps every drifted subgroup plus the `top_k` largest statistics.
    pub fn retained(&self, top_k: usize) -> DriftReport {
        let mut order: Vec<usize> = (0..self.records.len()).collect();
        order.sort_by(|&a, &b| {
            self.records[b]
                .t_value
                .partial_cmp(&self.records[a].t_value)
                .unwrap_or(Ordering::Equal)
                .then(a.cmp(&b))
        });
        let mut keep = alloc::vec![false; self.records.len()];
        for &k in order.iter().take(top_k) {
            keep[k] = true;
        }
        let records = self
            .records
            .iter()
            .zip(&keep)
            .filter(|(r, k)| **k || r.drifted)
            .map(|(r, _)| r.clone())
            .collect();
        DriftReport {
            records,
            ..self.clone()
        }
    }
}

/// Scores every subgroup whose reference window holds at least `min_count`
/// outcomes.
pub fn compare_windows(
    reference: &SubgroupStats,
    current: &SubgroupStats,
    tau_t: f64,
    min_count: u64,
) -> Result<Vec<SubgroupDrift>> {
    if reference.n_subgroups() != current.n_subgroups() {
        return Err(Error::DimensionMismatch {
            expected: reference.n_subgroups(),
            found: current.n_subgroups(),
        });
    }
    let mut records = Vec::new();
    for j in 0..reference.n_subgroups() {
        let (ra, rb) = reference.counts(j);
        if ra + rb < min_count {
            continue;
        }
        let (ca, cb) = current.counts(j);
        let r = beta_posterior(ra, rb);
        let c = beta_posterior(ca, cb);
        let t_value = welch_t(r, c);
        let h_ref = performance(ra, rb);
        let h_cur = performance(ca, cb);
        records.push(SubgroupDrift {
            subgroup: j,
            h_ref,
            h_cur,
            delta_h: h_ref.zip(h_cur).map(|(a, b)| a - b),
            mu_ref: r.mu,
            mu_cur: c.mu,
            nu_ref: r.nu,
            nu_cur: c.nu,
            t_value,
            drifted: t_value > tau_t,
        });
    }
    Ok(records)
}

/// Streaming monitor for one stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorState {
    config: WindowConfig,
    reference: Option<SubgroupStats>,
    pending_reference: Option<SubgroupStats>,
    pending_batches: usize,
    ring: VecDeque<SubgroupStats>,
    window_sum: Option<SubgroupStats>,
    batches_seen: u64,
}

impl MonitorState {
    pub fn new(config: WindowConfig) -> Self {
        MonitorState {
            config,
            reference: None,
            pending_reference: None,
            pending_batches: 0,
            ring: VecDeque::with_capacity(config.window_batches),
            window_sum: None,
            batches_seen: 0,
        }
    }

    pub fn config(&self) -> WindowConfig {
        self.config
    }

    pub fn batches_seen(&self) -> u64 {
        self.batches_seen
    }

    /// Frozen reference window, once complete.
    pub fn reference(&self) -> Option<&SubgroupStats> {
        self.reference.as_ref()
    }

    pub fn ring(&self) -> &VecDeque<SubgroupStats> {
        &self.ring
    }

    /// Sum of the batches currently in the ring.
    pub fn current(&self) -> Option<&SubgroupStats> {
        self.window_sum.as_ref()
    }

    /// Feeds one batch and returns its report. The first `window_batches`
    /// batches build the reference; later batches slide the current window,
    /// and reports are scored once that window is full.
    pub fn step(
        &mut self,
        batch: SubgroupStats,
        tau_t: f64,
        min_count: u64,
    ) -> Result<DriftReport> {
        if let Some(reference) = &self.reference {
            if batch.n_subgroups() != reference.n_subgroups() {
                return Err(Error::DimensionMismatch {
                    expected: reference.n_subgroups(),
                    found: batch.n_subgroups(),
                });
            }
        }
        self.batches_seen += 1;
        let batch_id = self.batches_seen;
        let w = self.config.window_batches;

        if self.reference.is_none() {
            match &mut self.pending_reference {
                Some(acc) => acc.add(&batch)?,
                None => self.pending_reference = Some(batch),
            }
            self.pending_batches += 1;
            if self.pending_batches >= w {
                self.reference = self.pending_reference.take();
                self.pending_batches = 0;
            }
            return Ok(DriftReport::warming_up(batch_id));
        }

        match &mut self.window_sum {
            Some(sum) => sum.add(&batch)?,
            None => self.window_sum = Some(batch.clone()),
        }
        self.ring.push_back(batch);
        if self.ring.len() > w {
            let old = self.ring.pop_front().expect("ring is non-empty");
            let sum = self
                .window_sum
                .as_mut()
                .expect("window sum tracks the ring");
            subtract(sum, &old);
        }
        if self.ring.len() < w {
            return Ok(DriftReport::warming_up(batch_id));
        }
        self.report(batch_id, tau_t, min_count)
    }

    /// Scores the current state without consuming a batch; `None` while warming up.
    pub fn current_report(&self, tau_t: f64, min_count: u64) -> Option<Result<DriftReport>> {
        (self.ring.len() >= self.config.window_batches && self.reference.is_some())
            .then(|| self.report(self.batches_seen, tau_t, min_count))
    }

    fn report(&self, batch_id: u64, tau_t: f64, min_count: u64) -> Result<DriftReport> {
        let reference = self.reference.as_ref().expect("reference frozen");
        let current = self.window_sum.as_ref().expect("current window filled");
        let records = compare_windows(reference, current, tau_t, min_count)?;
        let global_drift = records.iter().any(|r| r.drifted);
        Ok(DriftReport {
            batch_id,
            status: ReportStatus::Ready,
            global_drift,
            records,
        })
    }

    /// Discards the reference and current windows; the next
    /// `window_batches` batches form a new reference.
    pub fn reset_reference(&mut self) {
        self.reference = None;
        self.pending_reference = None;
        self.pending_batches = 0;
        self.ring.clear();
        self.window_sum = None;
    }
}

fn subtract(sum: &mut SubgroupStats, old: &SubgroupStats) {
    for (a, b) in sum.alpha.iter_mut().zip(&old.alpha) {
        *a -= b;
    }
    for (a, b) in sum.beta.iter_mut().zip(&old.beta) {
        *a -= b;
    }
    sum.n_instances -= old.n_instances;
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn stats(pairs: &[(u64, u64)]) -> SubgroupStats {
        SubgroupStats {
            alpha: pairs.iter().map(|p| p.0).collect(),
            beta: pairs.iter().map(|p| p.1).collect(),
            n_instances: pairs.iter().map(|p| p.0 + p.1).max().unwrap_or(0),
        }
    }

    #[test]
    fn uniform_prior() {
        let p = beta_posterior(0, 0);
        assert_eq!(p.mu, 0.5);
        assert!((p.nu - 1.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn posterior_fixtures() {
        let p = beta_posterior(8, 2);
        assert!((p.mu - 0.75).abs() < 1e-12);
        assert!((p.nu - 27.0 / 1872.0).abs() < 1e-12);
        let q = beta_posterior(50, 0);
        assert!((q.mu - 51.0 / 52.0).abs() < 1e-12);
        assert!((q.nu - 51.0 / 143312.0).abs() < 1e-12);
    }

    #[test]
    fn welch_is_symmetric_and_zero_on_identity() {
        let a = beta_posterior(50, 0);
        let b = beta_posterior(25, 25);
        assert_eq!(welch_t(a, a), 0.0);
        assert_eq!(welch_t(a, b), welch_t(b, a));
    }

    #[test]
    fn delta_undefined_without_outcomes() {
        let r = stats(&[(10, 0), (3, 1)]);
        let c = stats(&[(0, 0), (3, 1)]);
        assert_eq!(drift_delta(&r, &c, 0), None);
        assert_eq!(drift_delta(&r, &c, 1), Some(0.0));
    }

    #[test]
    fn warm_up_then_reports() {
        let mut m = MonitorState::new(WindowConfig::new(2).unwrap());
        let s = stats(&[(10, 0)]);
        for _ in 0..3 {
            assert!(!m.step(s.clone(), 5.0, 0).unwrap().is_ready());
        }
        let r = m.step(s.clone(), 5.0, 0).unwrap();
        assert!(r.is_ready());
        assert!(!r.global_drift);
        assert_eq!(r.batch_id, 4);
    }

    #[test]
    fn min_count_filters_reference_sparse_subgroups() {
        let mut m = MonitorState::new(WindowConfig::new(1).unwrap());
        m.step(stats(&[(20, 0), (1, 0)]), 5.0, 0).unwrap();
        let r = m.step(stats(&[(20, 0), (0, 5)]), 5.0, 5).unwrap();
        assert_eq!(r.records.len(), 1);
        assert_eq!(r.records[0].subgroup, 0);
    }

    #[test]
    fn reset_reference_restarts_warm_up() {
        let mut m = MonitorState::new(WindowConfig::new(1).unwrap());
        m.step(stats(&[(5, 5)]), 5.0, 0).unwrap();
        assert!(m.step(stats(&[(5, 5)]), 5.0, 0).unwrap().is_ready());
        m.reset_reference();
        assert!(m.reference().is_none());
        assert!(!m.step(stats(&[(5, 5)]), 5.0, 0).unwrap().is_ready());
        assert!(m.step(stats(&[(5, 5)]), 5.0, 0).unwrap().is_ready());
    }

    #[test]
    fn retained_keeps_flags_and_top_k() {
        let mut m = MonitorState::new(WindowConfig::new(1).unwrap());
        m.step(stats(&[(50, 0), (50, 0), (50, 0), (50, 0)]), 5.0, 0)
            .unwrap();
        let r = m
            .step(stats(&[(25, 25), (50, 0), (45, 5), (48, 2)]), 5.0, 0)
            .unwrap();
        let kept = r.retained(1);
        let ids: Vec<usize> = kept.records.iter().map(|r| r.subgroup).collect();
        assert_eq!(ids, vec![0]);
        let kept = r.retained(2);
        assert_eq!(kept.records.len(), 2);
        assert!(r.retained(0).records.iter().all(|r| r.drifted));
    }

    #[test]
    fn mismatched_batch_is_rejected() {
        let mut m = MonitorState::new(WindowConfig::new(1).unwrap());
        m.step(stats(&[(1, 1)]), 5.0, 0).unwrap();
        assert!(m.step(stats(&[(1, 1), (1, 1)]), 5.0, 0).is_err());
    }
}
