//! Batch encoding and the end-to-end monitoring loop.

use driftscope_core::detector::{DEFAULT_TAU_T, DEFAULT_WINDOW_BATCHES};
use driftscope_core::sgmetrics::batch_stats;
use driftscope_core::{
    DriftReport, EncodedBatch, MonitorState, OutcomeRecord, SubgroupCatalog, WindowConfig,
};
use serde::{Deserialize, Serialize};

use crate::error::AppResult;
use crate::outcomes::ranges;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonitorParams {
    pub window: usize,
    pub tau_t: f64,
    pub min_count: u64,
}

impl Default for MonitorParams {
    fn default() -> Self {
        MonitorParams {
            window: DEFAULT_WINDOW_BATCHES,
            tau_t: DEFAULT_TAU_T,
            min_count: 0,
        }
    }
}

/// Encodes contiguous batches; batch ids start at 1.
pub fn encode_batches(
    records: &[OutcomeRecord],
    sizes: &[usize],
    n_items: usize,
) -> AppResult<Vec<EncodedBatch>> {
    ranges(sizes)
        .into_iter()
        .enumerate()
        .map(|(b, r)| Ok(EncodedBatch::encode(&records[r], n_items, b as u64 + 1)?))
        .collect()
}

/// Runs the monitor over all batches and returns one report per batch plus
/// the final state.
pub fn run_monitor(
    catalog: &SubgroupCatalog,
    batches: &[EncodedBatch],
    params: MonitorParams,
) -> AppResult<(Vec<DriftReport>, MonitorState)> {
    let mut state = MonitorState::new(WindowConfig::new(params.window)?);
    let mut reports = Vec::with_capacity(batches.len());
    for batch in batches {
        let stats = batch_stats(batch, catalog)?;
        reports.push(state.step(stats, params.tau_t, params.min_count)?);
    }
    Ok((reports, state))
}

/// Per-batch maximum `t` over scored reports; warming-up batches are skipped.
pub fn batch_scores(reports: &[DriftReport]) -> Vec<f64> {
    reports
        .iter()
        .filter(|r| r.is_ready())
        .map(|r| r.max_t())
        .collect()
}
