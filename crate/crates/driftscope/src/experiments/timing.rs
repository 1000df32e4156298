//! Per-batch cost of subgroup monitoring: the sparse pipeline against one
//! baseline detector per subgroup fed the same stream.

use std::time::Instant;

use driftscope_core::baselines::{BaselineConfig, BaselineDetector, Decision};
use driftscope_core::evaluation::median;
use driftscope_core::sgmetrics::batch_stats;
use driftscope_core::{EncodedBatch, MonitorState, SubgroupCatalog, WindowConfig};
use serde::{Deserialize, Serialize};

use crate::error::AppResult;
use crate::pipeline::MonitorParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub method: String,
    pub setting: String,
    pub n_subgroups: usize,
    pub n_samples: usize,
    pub repetitions: usize,
    /// Median over all batches of all repetitions.
    pub median_batch_seconds: f64,
    /// Median batch time divided by the mean batch size.
    pub seconds_per_sample: f64,
    /// Drift decisions of the last repetition, to show both sides did work.
    pub drift_batches: usize,
}

fn row(
    method: &str,
    setting: String,
    catalog: &SubgroupCatalog,
    batches: &[EncodedBatch],
    times: &[f64],
    reps: usize,
    drifts: usize,
) -> TimingRow {
    let n_samples: usize = batches.iter().map(|b| b.len()).sum();
    let m = median(times);
    TimingRow {
        method: method.to_owned(),
        setting,
        n_subgroups: catalog.len(),
        n_samples,
        repetitions: reps,
        median_batch_seconds: m,
        seconds_per_sample: m * batches.len() as f64 / n_samples.max(1) as f64,
        drift_batches: drifts,
    }
}

/// Membership, aggregation and window update per batch.
pub fn time_sparse_pipeline(
    catalog: &SubgroupCatalog,
    batches: &[EncodedBatch],
    params: MonitorParams,
    reps: usize,
) -> AppResult<TimingRow> {
    let mut times = Vec::with_capacity(reps * batches.len());
    let mut drifts = 0;
    for _ in 0..reps {
        let mut state = MonitorState::new(WindowConfig::new(params.window)?);
        drifts = 0;
        for batch in batches {
            let start = Instant::now();
            let report =
                state.step(batch_stats(batch, catalog)?, params.tau_t, params.min_count)?;
            times.push(start.elapsed().as_secs_f64());
            drifts += usize::from(report.global_drift);
        }
    }
    Ok(row(
        "driftscope",
        format!("W={},tau_t={}", params.window, params.tau_t),
        catalog,
        batches,
        &times,
        reps,
        drifts,
    ))
}

fn is_subset(small: &[u32], big: &[u32]) -> bool {
    let mut it = big.iter();
    small.iter().all(|s| it.by_ref().any(|b| b == s))
}

/// One detector per subgroup; each subgroup's members are found by
/// filtering the batch with its itemset.
pub fn time_per_subgroup(
    catalog: &SubgroupCatalog,
    batches: &[EncodedBatch],
    config: &BaselineConfig,
    reps: usize,
) -> AppResult<TimingRow> {
    let mut times = Vec::with_capacity(reps * batches.len());
    let mut drifts = 0;
    let mut errors = Vec::new();
    for _ in 0..reps {
        let mut detectors = catalog
            .subgroups()
            .iter()
            .map(|_| BaselineDetector::new(config))
            .collect::<Result<Vec<_>, _>>()?;
        drifts = 0;
        for batch in batches {
            let start = Instant::now();
            let mut any = false;
            for (sg, det) in catalog.subgroups().iter().zip(detectors.iter_mut()) {
                errors.clear();
                for (row, &e) in batch.points().rows().zip(batch.beta()) {
                    if is_subset(&sg.items, row) {
                        errors.push(e);
                    }
                }
                any |= det.update_batch(&errors) == Decision::Drift;
            }
            times.push(start.elapsed().as_secs_f64());
            drifts += usize::from(any);
        }
    }
    Ok(row(
        config.kind().name(),
        config.label(),
        catalog,
        batches,
        &times,
        reps,
        drifts,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subset_walk() {
        assert!(is_subset(&[], &[1]));
        assert!(is_subset(&[1, 4], &[0, 1, 3, 4]));
        assert!(!is_subset(&[1, 2], &[0, 1, 3, 4]));
        assert!(!is_subset(&[5], &[0, 1]));
    }
}
