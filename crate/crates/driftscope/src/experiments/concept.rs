//! Global concept drift on synthetic streams.

use driftscope_core::baselines::BaselineKind;
use driftscope_core::catalog::{BinningConfig, ItemCatalog};
use driftscope_core::evaluation::{detection_scores, DetectionScores, Experiment, ExperimentKind};
use driftscope_core::mining::{mine_frequent, MiningConfig};
use driftscope_core::seed::SeedSplitter;
use driftscope_core::sparse::CsrPattern;
use driftscope_core::streams::{
    fit_tree, gen_concept_stream, ConceptStreamConfig, GeneratorKind, TreeModel,
};
use driftscope_core::{DriftReport, OutcomeRecord, RawValue, SubgroupCatalog};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{best_baselines, experiment_kind, kind_stream, run_baselines, MethodScores};
use crate::error::AppResult;
use crate::pipeline::{batch_scores, encode_batches, run_monitor, MonitorParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConceptSuiteConfig {
    pub generator: GeneratorKind,
    /// Concept before and after the drift in positive experiments;
    /// negative experiments stay on the first one.
    pub concepts: (usize, usize),
    pub n_positive: usize,
    pub n_negative: usize,
    pub tree_depth: usize,
    pub min_support: f64,
    pub max_len: usize,
    pub bins: usize,
    pub drift_center: f64,
    pub drift_width: f64,
    pub label_noise: f64,
    pub train_size: usize,
    pub n_batches: usize,
    pub batch_size: usize,
    pub monitor: MonitorParams,
    pub baselines: Vec<BaselineKind>,
    pub seed: u64,
    /// Keep every drift report of every run; off, runs keep only the
    /// scores and the reports list stays empty.
    pub keep_reports: bool,
}

impl Default for ConceptSuiteConfig {
    fn default() -> Self {
        let base = ConceptStreamConfig::new(GeneratorKind::Sea, 0, 0, 0);
        ConceptSuiteConfig {
            generator: GeneratorKind::Sea,
            concepts: (2, 3),
            n_positive: 20,
            n_negative: 20,
            tree_depth: 5,
            min_support: 0.05,
            max_len: 3,
            bins: 4,
            drift_center: base.drift_center,
            drift_width: base.drift_width,
            label_noise: base.label_noise,
            train_size: base.train_size,
            n_batches: base.n_batches,
            batch_size: base.batch_size,
            monitor: MonitorParams::default(),
            baselines: Vec::new(),
            seed: 0,
            keep_reports: true,
        }
    }
}

impl ConceptSuiteConfig {
    /// Concept pair used when none is given: SEA 2→3 and Agrawal 0→1 change
    /// the labels of a large share of the input space.
    pub fn for_generator(generator: GeneratorKind) -> Self {
        let concepts = match generator {
            GeneratorKind::Sea => (2, 3),
            GeneratorKind::Agrawal => (0, 1),
            GeneratorKind::Led => (0, 7),
            GeneratorKind::Hyperplane => (0, 5),
        };
        ConceptSuiteConfig {
            generator,
            concepts,
            ..Default::default()
        }
    }

    pub fn stream_config(&self, kind: ExperimentKind, seed: u64) -> ConceptStreamConfig {
        let b = if kind == ExperimentKind::Positive {
            self.concepts.1
        } else {
            self.concepts.0
        };
        ConceptStreamConfig {
            drift_center: self.drift_center,
            drift_width: self.drift_width,
            label_noise: self.label_noise,
            train_size: self.train_size,
            n_batches: self.n_batches,
            batch_size: self.batch_size,
            ..ConceptStreamConfig::new(self.generator, self.concepts.0, b, seed)
        }
    }
}

/// A monitor-ready view of one generated stream.
pub struct PreparedStream {
    pub model: TreeModel,
    pub items: ItemCatalog,
    pub subgroups: SubgroupCatalog,
    pub records: Vec<OutcomeRecord>,
    pub batch_sizes: Vec<usize>,
    pub train_accuracy: f64,
}

fn raw(x: &[Vec<f64>]) -> Vec<Vec<RawValue>> {
    x.iter()
        .map(|r| r.iter().map(|&v| RawValue::Number(v)).collect())
        .collect()
}

/// Generates the stream, fits the tree on the training part, bins the
/// features into items and mines subgroups on the training part.
pub fn prepare_stream(
    cfg: &ConceptSuiteConfig,
    stream_cfg: &ConceptStreamConfig,
) -> AppResult<PreparedStream> {
    let stream = gen_concept_stream(stream_cfg)?;
    let model = fit_tree(&stream.train.x, &stream.train.y, cfg.tree_depth)?;
    if model.is_constant() {
        log::warn!(
            "tree fitted on seed {} predicts a single class",
            stream_cfg.seed
        );
    }
    let binning = BinningConfig {
        default_bins: cfg.bins,
        ..Default::default()
    };
    let items = ItemCatalog::build(&stream.feature_names, &raw(&stream.train.x), &binning)?;
    let encoder = items.column_encoder(&stream.feature_names);
    let train_rows: Vec<Vec<u32>> = raw(&stream.train.x)
        .iter()
        .map(|r| encoder.encode(r).items)
        .collect();
    let points = CsrPattern::from_rows(items.n_items(), train_rows.iter().map(|r| r.as_slice()))?;
    let subgroups = mine_frequent(
        &points,
        Some(items.item_attributes()),
        &MiningConfig::new(cfg.min_support, cfg.max_len)?,
    )?;
    let train_accuracy =
        driftscope_core::streams::tree::accuracy(&model, &stream.train.x, &stream.train.y);
    let mut records = Vec::new();
    let mut batch_sizes = Vec::new();
    for batch in &stream.batches {
        batch_sizes.push(batch.len());
        for (x, &y) in batch.x.iter().zip(&batch.y) {
            let enc = encoder.encode(&x.iter().map(|&v| RawValue::Number(v)).collect::<Vec<_>>());
            let ok = model.predict(x) == y;
            records.push(OutcomeRecord {
                items: enc.items,
                alpha: ok,
                beta: !ok,
            });
        }
    }
    Ok(PreparedStream {
        model,
        items,
        subgroups,
        records,
        batch_sizes,
        train_accuracy,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptRun {
    pub kind: ExperimentKind,
    pub index: usize,
    pub seed: u64,
    pub n_subgroups: usize,
    pub train_accuracy: f64,
    pub experiment: Experiment,
    pub reports: Vec<DriftReport>,
    /// Per-configuration baseline flags.
    #[serde(skip)]
    pub baseline_flags: Vec<(driftscope_core::baselines::BaselineConfig, Vec<bool>)>,
}

pub fn run_concept_experiment(
    cfg: &ConceptSuiteConfig,
    kind: ExperimentKind,
    index: usize,
) -> AppResult<ConceptRun> {
    let seed = SeedSplitter::new(cfg.seed).seed(kind_stream(kind), index as u64);
    let prepared = prepare_stream(cfg, &cfg.stream_config(kind, seed))?;
    let batches = encode_batches(
        &prepared.records,
        &prepared.batch_sizes,
        prepared.items.n_items(),
    )?;
    let (reports, _) = run_monitor(&prepared.subgroups, &batches, cfg.monitor)?;
    let experiment = Experiment::from_scores(kind, batch_scores(&reports), cfg.monitor.tau_t);
    let reports = if cfg.keep_reports {
        reports
    } else {
        Vec::new()
    };
    let errors: Vec<Vec<bool>> = batches.iter().map(|b| b.beta().to_vec()).collect();
    let baseline_flags = run_baselines(&cfg.baselines, cfg.monitor.window, seed, &errors)?;
    Ok(ConceptRun {
        kind,
        index,
        seed,
        n_subgroups: prepared.subgroups.len(),
        train_accuracy: prepared.train_accuracy,
        experiment,
        reports,
        baseline_flags,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptSuite {
    pub config: ConceptSuiteConfig,
    pub runs: Vec<ConceptRun>,
    pub scores: DetectionScores,
    pub baselines: Vec<MethodScores>,
}

/// Positive experiments first, then negatives; each runs on its own seed.
pub fn run_concept_suite(
    cfg: &ConceptSuiteConfig,
    pool: &rayon::ThreadPool,
) -> AppResult<ConceptSuite> {
    let jobs: Vec<(ExperimentKind, usize)> = (0..cfg.n_positive)
        .map(|i| (experiment_kind(true), i))
        .chain((0..cfg.n_negative).map(|i| (experiment_kind(false), i)))
        .collect();
    let runs = pool.install(|| {
        jobs.par_iter()
            .map(|&(k, i)| run_concept_experiment(cfg, k, i))
            .collect::<AppResult<Vec<_>>>()
    })?;
    let experiments: Vec<Experiment> = runs.iter().map(|r| r.experiment.clone()).collect();
    let kinds: Vec<ExperimentKind> = runs.iter().map(|r| r.kind).collect();
    let flags: Vec<_> = runs.iter().map(|r| r.baseline_flags.clone()).collect();
    Ok(ConceptSuite {
        config: cfg.clone(),
        scores: detection_scores(&experiments),
        baselines: best_baselines(&kinds, &flags),
        runs,
    })
}

impl ConceptSuite {
    /// Every report of every run, one JSON document per line, in run order.
    pub fn reports_jsonl(&self) -> AppResult<Vec<u8>> {
        let mut out = Vec::new();
        for run in &self.runs {
            for r in &run.reports {
                #[derive(Serialize)]
                struct Line<'a> {
                    kind: ExperimentKind,
                    index: usize,
                    report: &'a DriftReport,
                }
                serde_json::to_writer(
                    &mut out,
                    &Line {
                        kind: run.kind,
                        index: run.index,
                        report: r,
                    },
                )
                .map_err(|e| crate::error::AppError::data(format!("json encoding: {e}")))?;
                out.push(b'\n');
            }
        }
        Ok(out)
    }
}
