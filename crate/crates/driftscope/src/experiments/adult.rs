//! Subgroup label-flip injection on the Adult census data.

use driftscope_core::baselines::{BaselineConfig, BaselineKind};
use driftscope_core::catalog::{BinningConfig, ItemCatalog};
use driftscope_core::evaluation::{
    altered_fractions, correlations, detection_scores, mean_std, ndcg_for_scores, random_ndcg,
    DetectionScores, Experiment, ExperimentKind,
};
use driftscope_core::mining::{mine_frequent, MiningConfig};
use driftscope_core::seed::SeedSplitter;
use driftscope_core::sgmetrics::membership;
use driftscope_core::sparse::CsrPattern;
use driftscope_core::streams::{fit_tree, inject_label_flip, DriftSchedule, RampShape, TreeModel};
use driftscope_core::{DriftReport, EncodedBatch, OutcomeRecord, SubgroupCatalog};
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{best_baselines, experiment_kind, kind_stream, run_baselines, MethodScores};
use crate::adult::AdultData;
use crate::error::{AppError, AppResult};
use crate::outcomes::equal_batches;
use crate::pipeline::{batch_scores, encode_batches, run_monitor, MonitorParams};

/// Seed streams of the splitter.
const SPLIT_STREAM: u64 = 0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdultSuiteConfig {
    /// Targets are drawn from subgroups whose training support lies in this
    /// closed interval.
    pub support_band: (f64, f64),
    pub p_max: f64,
    pub ramp: RampShape,
    pub n_positive: usize,
    pub n_negative: usize,
    pub tree_depth: usize,
    pub min_support: f64,
    pub max_len: usize,
    pub bins: usize,
    pub n_batches: usize,
    pub monitor: MonitorParams,
    pub baselines: Vec<BaselineKind>,
    /// Cut-off of the nDCG ranking metric.
    pub ndcg_k: usize,
    /// Random orderings drawn per positive experiment for the nDCG baseline.
    pub n_permutations: usize,
    pub seed: u64,
}

impl Default for AdultSuiteConfig {
    fn default() -> Self {
        AdultSuiteConfig {
            support_band: (0.01, 0.05),
            p_max: 0.8,
            ramp: RampShape::Linear,
            n_positive: 20,
            n_negative: 20,
            tree_depth: 8,
            min_support: 0.01,
            max_len: 3,
            bins: 4,
            n_batches: 30,
            monitor: MonitorParams::default(),
            baselines: vec![BaselineKind::Ddm],
            ndcg_k: 10,
            n_permutations: 100,
            seed: 0,
        }
    }
}

/// Everything shared by the experiments of a suite: the 50/50 split, the
/// fitted model, the item catalog and the mined subgroups.
pub struct AdultContext {
    pub items: ItemCatalog,
    pub subgroups: SubgroupCatalog,
    pub model: TreeModel,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    /// Test rows: encoded items, true label and model prediction.
    pub test_items: Vec<Vec<u32>>,
    pub test_labels: Vec<u32>,
    pub test_predictions: Vec<u32>,
}

impl AdultContext {
    pub fn prepare(data: &AdultData, cfg: &AdultSuiteConfig) -> AppResult<AdultContext> {
        Self::prepare_with(data, cfg, cfg.min_support, cfg.max_len)
    }

    /// As [`AdultContext::prepare`] with explicit mining parameters.
    pub fn prepare_with(
        data: &AdultData,
        cfg: &AdultSuiteConfig,
        min_support: f64,
        max_len: usize,
    ) -> AppResult<AdultContext> {
        if data.is_empty() {
            return Err(AppError::data("adult data is empty"));
        }
        let mut order: Vec<usize> = (0..data.len()).collect();
        order.shuffle(&mut SeedSplitter::new(cfg.seed).rng(SPLIT_STREAM, 0));
        let (train, test) = order.split_at(data.len() / 2);
        let features = data.features();
        let pick = |rows: &[usize]| -> Vec<Vec<f64>> {
            rows.iter().map(|&r| features[r].clone()).collect()
        };
        let labels =
            |rows: &[usize]| -> Vec<u32> { rows.iter().map(|&r| data.labels[r]).collect() };
        let (train_x, test_x) = (pick(train), pick(test));
        let (train_y, test_labels) = (labels(train), labels(test));
        let model = fit_tree(&train_x, &train_y, cfg.tree_depth)?;
        let train_accuracy = driftscope_core::streams::tree::accuracy(&model, &train_x, &train_y);
        let test_predictions = model.predict_all(&test_x);
        let test_accuracy = test_predictions
            .iter()
            .zip(&test_labels)
            .filter(|(p, y)| p == y)
            .count() as f64
            / test_labels.len() as f64;

        let names = AdultData::metadata_names();
        let binning = BinningConfig {
            default_bins: cfg.bins,
            ..Default::default()
        };
        let train_meta = data.metadata(train);
        let items = ItemCatalog::build(&names, &train_meta, &binning)?;
        let encoder = items.column_encoder(&names);
        let train_items: Vec<Vec<u32>> =
            train_meta.iter().map(|r| encoder.encode(r).items).collect();
        let points =
            CsrPattern::from_rows(items.n_items(), train_items.iter().map(|r| r.as_slice()))?;
        let subgroups = mine_frequent(
            &points,
            Some(items.item_attributes()),
            &MiningConfig::new(min_support, max_len)?,
        )?;
        let test_items = data
            .metadata(test)
            .iter()
            .map(|r| encoder.encode(r).items)
            .collect();
        log::info!(
            "adult: {} items, {} subgroups, tree accuracy train {:.4} test {:.4}",
            items.n_items(),
            subgroups.len(),
            train_accuracy,
            test_accuracy
        );
        Ok(AdultContext {
            items,
            subgroups,
            model,
            train_accuracy,
            test_accuracy,
            test_items,
            test_labels,
            test_predictions,
        })
    }

    /// Candidate targets: non-global subgroups with support in the band.
    pub fn targets_in_band(&self, band: (f64, f64)) -> Vec<usize> {
        self.subgroups
            .subgroups()
            .iter()
            .filter(|s| !s.is_global() && s.support >= band.0 && s.support <= band.1)
            .map(|s| s.index)
            .collect()
    }

    /// Records of the test half in the order given by `perm`, with `labels`
    /// already permuted.
    pub fn records(&self, perm: &[usize], labels: &[u32]) -> Vec<OutcomeRecord> {
        perm.iter()
            .zip(labels)
            .map(|(&i, &y)| {
                let ok = self.test_predictions[i] == y;
                OutcomeRecord {
                    items: self.test_items[i].clone(),
                    alpha: ok,
                    beta: !ok,
                }
            })
            .collect()
    }
}

/// Ranking quality of one positive experiment's final report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingOutcome {
    pub ndcg: f64,
    pub random_ndcg: Vec<f64>,
    pub pearson: Option<f64>,
    pub spearman: Option<f64>,
    /// Altered fraction of the target over the final current window.
    pub target_relevance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdultRun {
    pub kind: ExperimentKind,
    pub index: usize,
    pub target: Option<usize>,
    pub target_support: Option<f64>,
    pub experiment: Experiment,
    pub final_report: DriftReport,
    pub ranking: Option<RankingOutcome>,
    #[serde(skip)]
    pub baseline_flags: Vec<(BaselineConfig, Vec<bool>)>,
}

/// One experiment: shuffle the test half into batches, inject drift into a
/// random target for positives, monitor, and score the final ranking.
pub fn run_adult_experiment(
    ctx: &AdultContext,
    cfg: &AdultSuiteConfig,
    candidates: &[usize],
    kind: ExperimentKind,
    index: usize,
) -> AppResult<AdultRun> {
    let splitter = SeedSplitter::new(cfg.seed).child(kind_stream(kind), index as u64);
    let mut rng = splitter.rng(0, 0);
    let n = ctx.test_labels.len();
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);
    let sizes = equal_batches(n, cfg.n_batches);
    let mut labels: Vec<u32> = perm.iter().map(|&i| ctx.test_labels[i]).collect();
    let mut altered = vec![false; n];
    let mut target = None;
    if kind == ExperimentKind::Positive {
        if candidates.is_empty() {
            return Err(AppError::data(format!(
                "no subgroup with support in [{}, {}]",
                cfg.support_band.0, cfg.support_band.1
            )));
        }
        let t = candidates[rng.gen_range(0..candidates.len())];
        let items: Vec<Vec<u32>> = perm.iter().map(|&i| ctx.test_items[i].clone()).collect();
        let schedule = DriftSchedule {
            normal_batches: cfg.n_batches / 3,
            transition_batches: cfg.n_batches / 3,
            drift_batches: cfg.n_batches - 2 * (cfg.n_batches / 3),
            p_max: cfg.p_max,
            target: ctx.subgroups.get(t).expect("candidate index").items.clone(),
            ramp: cfg.ramp,
        };
        let injected =
            inject_label_flip(&items, &labels, &sizes, &schedule, &mut splitter.rng(1, 0))?;
        labels = injected.labels;
        altered = injected.altered;
        target = Some(t);
    }
    let records = ctx.records(&perm, &labels);
    let batches = encode_batches(&records, &sizes, ctx.items.n_items())?;
    let (mut reports, _) = run_monitor(&ctx.subgroups, &batches, cfg.monitor)?;
    let experiment = Experiment::from_scores(kind, batch_scores(&reports), cfg.monitor.tau_t);
    let errors: Vec<Vec<bool>> = batches.iter().map(|b| b.beta().to_vec()).collect();
    let baseline_flags = run_baselines(
        &cfg.baselines,
        cfg.monitor.window,
        splitter.seed(2, 0),
        &errors,
    )?;
    let final_report = reports.pop().ok_or_else(|| AppError::data("no batches"))?;

    let ranking = match target {
        Some(t) if final_report.is_ready() => {
            let w = cfg.monitor.window.min(batches.len());
            let start: usize = sizes[..sizes.len() - w].iter().sum();
            let window = EncodedBatch::encode(&records[start..], ctx.items.n_items(), 0)?;
            let fractions =
                altered_fractions(&membership(&window, &ctx.subgroups)?, &altered[start..])?;
            let relevance: Vec<f64> = final_report
                .records
                .iter()
                .map(|r| fractions[r.subgroup])
                .collect();
            let scores: Vec<f64> = final_report.records.iter().map(|r| r.t_value).collect();
            let corr = correlations(&relevance, &scores).ok();
            Some(RankingOutcome {
                ndcg: ndcg_for_scores(&relevance, &scores, cfg.ndcg_k)?,
                random_ndcg: random_ndcg(
                    &relevance,
                    cfg.ndcg_k,
                    cfg.n_permutations,
                    &mut splitter.rng(3, 0),
                ),
                pearson: corr.as_ref().and_then(|c| c.pearson),
                spearman: corr.as_ref().and_then(|c| c.spearman),
                target_relevance: fractions[t],
            })
        }
        _ => None,
    };
    Ok(AdultRun {
        kind,
        index,
        target,
        target_support: target.and_then(|t| ctx.subgroups.get(t)).map(|s| s.support),
        experiment,
        final_report,
        ranking,
        baseline_flags,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl Summary {
    pub fn of(values: &[f64]) -> Summary {
        let (mean, std) = mean_std(values);
        Summary {
            mean,
            std,
            n: values.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingSummary {
    pub ndcg: Summary,
    /// Pooled over all random orderings of all positive experiments.
    pub random_ndcg: Summary,
    pub pearson: Summary,
    pub spearman: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdultSuite {
    pub config: AdultSuiteConfig,
    pub n_subgroups: usize,
    pub n_candidates: usize,
    pub test_accuracy: f64,
    pub runs: Vec<AdultRun>,
    pub scores: DetectionScores,
    pub baselines: Vec<MethodScores>,
    pub ranking: RankingSummary,
}

pub fn run_adult_suite(
    ctx: &AdultContext,
    cfg: &AdultSuiteConfig,
    pool: &rayon::ThreadPool,
) -> AppResult<AdultSuite> {
    let candidates = ctx.targets_in_band(cfg.support_band);
    let jobs: Vec<(ExperimentKind, usize)> = (0..cfg.n_positive)
        .map(|i| (experiment_kind(true), i))
        .chain((0..cfg.n_negative).map(|i| (experiment_kind(false), i)))
        .collect();
    let runs = pool.install(|| {
        jobs.par_iter()
            .map(|&(k, i)| run_adult_experiment(ctx, cfg, &candidates, k, i))
            .collect::<AppResult<Vec<_>>>()
    })?;
    let experiments: Vec<Experiment> = runs.iter().map(|r| r.experiment.clone()).collect();
    let kinds: Vec<ExperimentKind> = runs.iter().map(|r| r.kind).collect();
    let flags: Vec<_> = runs.iter().map(|r| r.baseline_flags.clone()).collect();
    let rankings: Vec<&RankingOutcome> = runs.iter().filter_map(|r| r.ranking.as_ref()).collect();
    let collect = |f: &dyn Fn(&RankingOutcome) -> Option<f64>| -> Vec<f64> {
        rankings.iter().filter_map(|r| f(r)).collect()
    };
    let pooled: Vec<f64> = rankings
        .iter()
        .flat_map(|r| r.random_ndcg.iter().copied())
        .collect();
    let ranking = RankingSummary {
        ndcg: Summary::of(&collect(&|r| Some(r.ndcg))),
        random_ndcg: Summary::of(&pooled),
        pearson: Summary::of(&collect(&|r| r.pearson)),
        spearman: Summary::of(&collect(&|r| r.spearman)),
    };
    Ok(AdultSuite {
        config: cfg.clone(),
        n_subgroups: ctx.subgroups.len(),
        n_candidates: candidates.len(),
        test_accuracy: ctx.test_accuracy,
        scores: detection_scores(&experiments),
        baselines: best_baselines(&kinds, &flags),
        ranking,
        runs,
    })
}
