//! Experiment suites: synthetic concept drift, Adult label-flip injection
//! and the timing benchmark.

pub mod adult;
pub mod concept;
pub mod timing;

use driftscope_core::baselines::{BaselineConfig, BaselineDetector, BaselineKind, Decision};
use driftscope_core::evaluation::{detection_scores, DetectionScores, Experiment, ExperimentKind};
use serde::{Deserialize, Serialize};

use crate::error::{AppError, AppResult};

pub const THREADS_ENV: &str = "DRIFTSCOPE_THREADS";

/// Worker pool capped by `$DRIFTSCOPE_THREADS` when set.
pub fn thread_pool() -> AppResult<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v.parse().ok().filter(|&n| n > 0).ok_or_else(|| {
            AppError::usage(format!(
                "{THREADS_ENV} must be a positive integer, got `{v}`"
            ))
        })?;
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| AppError::data(format!("thread pool: {e}")))
}

/// Per-batch drift flags of one baseline fed the per-instance error stream.
pub fn baseline_flags(config: &BaselineConfig, batches: &[Vec<bool>]) -> AppResult<Vec<bool>> {
    let mut det = BaselineDetector::new(config)?;
    Ok(batches
        .iter()
        .map(|errors| det.update_batch(errors) == Decision::Drift)
        .collect())
}

/// Flags of every configuration in each listed baseline's grid.
pub fn run_baselines(
    kinds: &[BaselineKind],
    window_batches: usize,
    seed: u64,
    batches: &[Vec<bool>],
) -> AppResult<Vec<(BaselineConfig, Vec<bool>)>> {
    let mut out = Vec::new();
    for kind in kinds {
        for cfg in kind.grid(window_batches) {
            let cfg = cfg.with_seed(seed);
            let flags = baseline_flags(&cfg, batches)?;
            out.push((cfg, flags));
        }
    }
    Ok(out)
}

/// Detection scores of one method over a suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodScores {
    pub method: String,
    /// Hyperparameter setting the scores belong to.
    pub setting: String,
    pub scores: DetectionScores,
}

/// Scores every baseline configuration and keeps the best F1 per detector
/// kind (ties to the first grid entry). `flags[e]` holds the per-config
/// flags of experiment `e`.
pub fn best_baselines(
    kinds: &[ExperimentKind],
    flags: &[Vec<(BaselineConfig, Vec<bool>)>],
) -> Vec<MethodScores> {
    let Some(first) = flags.first() else {
        return Vec::new();
    };
    let mut best: Vec<MethodScores> = Vec::new();
    for (c, (cfg, _)) in first.iter().enumerate() {
        let experiments: Vec<Experiment> = kinds
            .iter()
            .zip(flags)
            .map(|(&k, f)| Experiment::from_flags(k, f[c].1.clone()))
            .collect();
        let scores = detection_scores(&experiments);
        let method = cfg.kind().name().to_owned();
        let f1 = scores.f1.unwrap_or(0.0);
        match best.iter_mut().find(|m| m.method == method) {
            Some(m) if m.scores.f1.unwrap_or(0.0) < f1 => {
                m.scores = scores;
                m.setting = cfg.label();
            }
            Some(_) => {}
            None => best.push(MethodScores {
                method,
                setting: cfg.label(),
                scores,
            }),
        }
    }
    best
}

pub fn experiment_kind(positive: bool) -> ExperimentKind {
    if positive {
        ExperimentKind::Positive
    } else {
        ExperimentKind::Negative
    }
}

pub fn kind_stream(kind: ExperimentKind) -> u64 {
    match kind {
        ExperimentKind::Positive => 1,
        ExperimentKind::Negative => 2,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn best_baseline_picks_highest_f1() {
        let kinds = [ExperimentKind::Positive, ExperimentKind::Negative];
        let a = BaselineConfig::Ddm { min_samples: 500 };
        let b = BaselineConfig::Ddm { min_samples: 1000 };
        let flags = vec![
            vec![(a, vec![true]), (b, vec![true])],
            vec![(a, vec![true]), (b, vec![false])],
        ];
        let best = best_baselines(&kinds, &flags);
        assert_eq!(best.len(), 1);
        assert_eq!(best[0].setting, b.label());
        assert_eq!(best[0].scores.f1, Some(1.0));
    }

    #[test]
    fn ddm_flags_on_error_jump() {
        let mut batches = vec![vec![false; 1000]; 5];
        for (i, b) in batches.iter_mut().enumerate() {
            for (j, e) in b.iter_mut().enumerate() {
                *e = j % if i < 3 { 10 } else { 2 } == 0;
            }
        }
        let flags = baseline_flags(&BaselineConfig::Ddm { min_samples: 500 }, &batches).unwrap();
        assert!(!flags[1] && flags[3..].iter().any(|&f| f), "{flags:?}");
    }
}
