//! Command-line front end.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use driftscope_core::baselines::{BaselineConfig, BaselineDetector, BaselineKind, Decision};
use driftscope_core::catalog::{BinningConfig, ItemCatalog};
use driftscope_core::detector::{DEFAULT_TAU_T, DEFAULT_WINDOW_BATCHES};
use driftscope_core::evaluation::youden_curve;
use driftscope_core::explain::{
    rank, redundancy_prune, shapley_global, shapley_local, ReportValues,
};
use driftscope_core::mining::{mine_frequent, MiningConfig, DEFAULT_MAX_LEN};
use driftscope_core::seed::SeedSplitter;
use driftscope_core::sparse::CsrPattern;
use driftscope_core::streams::{
    fit_tree, gen_concept_stream, inject_label_flip, ConceptStreamConfig, DriftSchedule,
    GeneratorKind, RampShape,
};
use driftscope_core::{DriftReport, MetricSpec};
use serde::Serialize;

use crate::adult;
use crate::config::{check, check_fraction, pick, FileConfig};
use crate::error::{AppError, AppResult};
use crate::experiments::adult::{run_adult_suite, AdultContext, AdultSuite, AdultSuiteConfig};
use crate::experiments::concept::{run_concept_suite, ConceptSuite, ConceptSuiteConfig};
use crate::experiments::thread_pool;
use crate::experiments::timing::{time_per_subgroup, time_sparse_pipeline};
use crate::formats::{num, opt, render, report_table, CatalogBundle, Format};
use crate::io::{read_json, read_jsonl, to_jsonl, write_atomic, write_json, Table};
use crate::manifest::{manifest_path, Manifest};
use crate::outcomes::{
    batch_sizes, column_names, metadata_columns, outcome_records, raw_rows, Batching,
};
use crate::pipeline::{encode_batches, run_monitor, MonitorParams};

#[derive(Debug, Parser)]
#[command(
    name = "driftscope",
    version,
    about = "Subgroup-level model performance drift monitor"
)]
pub struct Cli {
    /// More log output (repeatable); RUST_LOG overrides.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    /// Only log errors.
    #[arg(short, long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build the item catalog and mine frequent subgroups from reference data.
    Mine(MineArgs),
    /// Monitor a batched outcome stream against a mined catalog.
    Monitor(MonitorArgs),
    /// Generate a synthetic stream with concept drift.
    Gen(GenArgs),
    /// Flip labels inside one subgroup following the drift schedule.
    Inject(InjectArgs),
    /// Run a baseline detector over a stream, or time it per subgroup.
    Bench(BenchArgs),
    /// Run an experiment suite and write scored results.
    Eval(EvalArgs),
    /// Rank, prune and explain saved drift reports.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// TOML or JSON file with default parameters.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct MineArgs {
    #[command(flatten)]
    common: Common,
    /// CSV or JSONL reference data (optionally .gz).
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    min_support: Option<f64>,
    #[arg(long)]
    max_len: Option<usize>,
    /// Quantile bins for numeric attributes.
    #[arg(long)]
    bins: Option<usize>,
    /// Columns to leave out of the metadata.
    #[arg(long, value_delimiter = ',')]
    exclude: Vec<String>,
    /// Attributes to treat as categorical even when numeric.
    #[arg(long, value_delimiter = ',')]
    categorical: Vec<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct BatchArgs {
    /// Rows per batch (default: the `batch` column).
    #[arg(long, conflicts_with = "n_batches")]
    batch_size: Option<usize>,
    /// Split the input into this many equal batches.
    #[arg(long)]
    n_batches: Option<usize>,
}

impl BatchArgs {
    fn resolve(&self, file: &FileConfig, table: &Table) -> AppResult<Batching> {
        let rule = match (
            self.batch_size.or(file.batch_size),
            self.n_batches.or(file.n_batches),
        ) {
            (Some(s), _) => Batching::Size(s),
            (None, Some(k)) => Batching::Count(k),
            (None, None) if table.column("batch").is_some() => Batching::Column,
            (None, None) => {
                return Err(AppError::usage(
                    "no `batch` column: pass --batch-size or --n-batches",
                ))
            }
        };
        Ok(rule)
    }
}

#[derive(Debug, Args)]
struct MonitorArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    catalog: PathBuf,
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    batching: BatchArgs,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    tau_t: Option<f64>,
    /// Skip subgroups with fewer reference outcomes.
    #[arg(long)]
    min_count: Option<u64>,
    /// accuracy, fpr, fnr or explicit.
    #[arg(long)]
    metric: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    format: Option<Format>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Dataset {
    Agrawal,
    Sea,
    Led,
    Hyperplane,
}

impl From<Dataset> for GeneratorKind {
    fn from(d: Dataset) -> Self {
        match d {
            Dataset::Agrawal => GeneratorKind::Agrawal,
            Dataset::Sea => GeneratorKind::Sea,
            Dataset::Led => GeneratorKind::Led,
            Dataset::Hyperplane => GeneratorKind::Hyperplane,
        }
    }
}

#[derive(Debug, Args)]
struct GenArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum)]
    dataset: Dataset,
    /// Concepts before and after the drift, e.g. `0,2`.
    #[arg(long, value_delimiter = ',')]
    concepts: Vec<usize>,
    #[arg(long)]
    drift_center: Option<f64>,
    #[arg(long)]
    drift_width: Option<f64>,
    #[arg(long)]
    label_noise: Option<f64>,
    #[arg(long)]
    train_size: Option<usize>,
    #[arg(long)]
    n_batches: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Fit a tree of this depth on the training part and add `y_hat`.
    #[arg(long)]
    tree_depth: Option<usize>,
    #[arg(long)]
    out: PathBuf,
    /// Also write the training part here.
    #[arg(long)]
    train_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Ramp {
    Linear,
    Sigmoid,
}

#[derive(Debug, Args)]
struct InjectArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    input: PathBuf,
    /// Target itemset, e.g. `sex=Female,age=(25,36]`.
    #[arg(long)]
    subgroup: String,
    #[arg(long)]
    p_max: Option<f64>,
    /// Item catalog to resolve the target; built from the input when absent.
    #[arg(long)]
    catalog: Option<PathBuf>,
    #[arg(long)]
    bins: Option<usize>,
    #[command(flatten)]
    batching: BatchArgs,
    #[arg(long, default_value_t = 10)]
    normal_batches: usize,
    #[arg(long, default_value_t = 10)]
    transition_batches: usize,
    #[arg(long, value_enum, default_value_t = Ramp::Linear)]
    ramp: Ramp,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
    /// Per-row altered flags.
    #[arg(long)]
    mask: PathBuf,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[command(flatten)]
    common: Common,
    /// ddm, hddm_a, page_hinkley, adwin, kswin, chi2 or fet.
    #[arg(long)]
    detector: String,
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    batching: BatchArgs,
    /// DDM minimum samples.
    #[arg(long)]
    min_samples: Option<u64>,
    /// HDDM_A drift confidence.
    #[arg(long)]
    confidence: Option<f64>,
    /// Page-Hinkley minimum instances.
    #[arg(long)]
    min_instances: Option<u64>,
    /// ADWIN delta.
    #[arg(long)]
    delta: Option<f64>,
    /// KSWIN window size.
    #[arg(long)]
    kswin_window: Option<usize>,
    /// Significance level of chi2/fet.
    #[arg(long)]
    p_value: Option<f64>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Time one detector per subgroup of this catalog against the sparse pipeline.
    #[arg(long)]
    catalog: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    reps: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Suite {
    AdultInject,
    Agrawal,
    Sea,
    Led,
    Hyperplane,
    TauSweep,
    WindowSweep,
    Timing,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum)]
    suite: Suite,
    /// Support band edges for target sampling; consecutive pairs form bands.
    #[arg(long, value_delimiter = ',')]
    supports: Vec<f64>,
    /// Positive and negative experiments each.
    #[arg(long)]
    n_exp: Option<usize>,
    #[arg(long)]
    p_max: Option<f64>,
    #[arg(long)]
    min_support: Option<f64>,
    #[arg(long)]
    max_len: Option<usize>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    tau_t: Option<f64>,
    #[arg(long)]
    tree_depth: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Baseline detectors to score alongside (comma separated, or `all`).
    #[arg(long, value_delimiter = ',')]
    baselines: Vec<String>,
    /// Concept pair for synthetic suites.
    #[arg(long, value_delimiter = ',')]
    concepts: Vec<usize>,
    /// Directory of the Adult files.
    #[arg(long)]
    adult_dir: Option<PathBuf>,
    /// Also write every drift report of the suite as JSONL here.
    #[arg(long)]
    reports_out: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    format: Option<Format>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    #[command(flatten)]
    common: Common,
    /// Directory written by `monitor`.
    #[arg(long)]
    reports: PathBuf,
    /// Catalog (default: the copy inside the reports directory).
    #[arg(long)]
    catalog: Option<PathBuf>,
    /// Batch to explain (default: the last scored one).
    #[arg(long)]
    batch: Option<u64>,
    /// Redundancy pruning threshold on t.
    #[arg(long)]
    prune_t: Option<f64>,
    /// Add item attributions.
    #[arg(long)]
    shapley: bool,
    #[arg(long)]
    top: Option<usize>,
    /// Output directory (default: print the ranking to stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    format: Option<Format>,
}

/// Parses `argv`, runs the command and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    init_logging(cli.verbose, cli.quiet);
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            log::error!("{e}");
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn init_logging(verbose: u8, quiet: bool) {
    let level = match (quiet, verbose) {
        (true, _) => "error",
        (false, 0) => "warn",
        (false, 1) => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .target(env_logger::Target::Stderr)
        .try_init();
}

fn execute(command: Command) -> AppResult<()> {
    match command {
        Command::Mine(a) => mine(a),
        Command::Monitor(a) => monitor(a),
        Command::Gen(a) => gen(a),
        Command::Inject(a) => inject(a),
        Command::Bench(a) => bench(a),
        Command::Eval(a) => eval(a),
        Command::Report(a) => report(a),
    }
}

fn read_input(path: &Path) -> AppResult<Table> {
    let table = Table::read(path)?;
    if table.is_empty() {
        return Err(AppError::data(format!("{}: no rows", path.display())));
    }
    Ok(table)
}

fn load_bundle(path: &Path) -> AppResult<CatalogBundle> {
    read_json(path)
}

#[derive(Serialize)]
struct MineConfig {
    min_support: f64,
    max_len: usize,
    bins: usize,
    exclude: Vec<String>,
    categorical: Vec<String>,
}

fn mine(a: MineArgs) -> AppResult<()> {
    let file = FileConfig::load_opt(a.common.config.as_deref())?;
    let cfg = MineConfig {
        min_support: pick(a.min_support, file.min_support, 0.05),
        max_len: pick(a.max_len, file.max_len, DEFAULT_MAX_LEN),
        bins: pick(
            a.bins,
            file.bins,
            driftscope_core::catalog::DEFAULT_QUANTILE_BINS,
        ),
        exclude: a.exclude,
        categorical: a.categorical,
    };
    check_fraction("--min-support", cfg.min_support, false)?;
    check(cfg.max_len >= 1, || "--max-len must be at least 1".into())?;
    check(cfg.bins >= 1, || "--bins must be at least 1".into())?;
    let table = read_input(&a.input)?;
    let cols = metadata_columns(&table, &cfg.exclude);
    if cols.is_empty() {
        return Err(AppError::data("input has no metadata columns"));
    }
    let names = column_names(&table, &cols);
    let rows = raw_rows(&table, &cols);
    let mut binning = BinningConfig {
        default_bins: cfg.bins,
        ..Default::default()
    };
    for c in &cfg.categorical {
        binning = binning.with_rule(c, driftscope_core::catalog::BinningRule::Categorical);
    }
    let items = ItemCatalog::build(&names, &rows, &binning)?;
    let encoder = items.column_encoder(&names);
    let encoded: Vec<Vec<u32>> = rows.iter().map(|r| encoder.encode(r).items).collect();
    let points = CsrPattern::from_rows(items.n_items(), encoded.iter().map(|r| r.as_slice()))?;
    let subgroups = mine_frequent(
        &points,
        Some(items.item_attributes()),
        &MiningConfig::new(cfg.min_support, cfg.max_len)?,
    )?;
    log::info!(
        "{} items, {} subgroups over {} rows",
        items.n_items(),
        subgroups.len(),
        table.len()
    );
    let bundle = CatalogBundle { items, subgroups };
    write_json(&a.out, &bundle)?;
    let mut manifest = Manifest::new("mine", &cfg)?.input(&a.input)?;
    manifest.output(&a.out);
    manifest.write(&manifest_path(&a.out, false))
}

#[derive(Serialize)]
struct MonitorConfig {
    params: MonitorParams,
    metric: MetricSpec,
    batching: String,
}

fn summary_table(reports: &[DriftReport]) -> Table {
    let mut t = Table::new(
        [
            "batch_id",
            "status",
            "global_drift",
            "n_scored",
            "n_drifted",
            "max_t",
        ]
        .iter()
        .map(|s| (*s).to_owned())
        .collect(),
    );
    for r in reports {
        t.rows.push(vec![
            r.batch_id.to_string(),
            if r.is_ready() { "ready" } else { "warming_up" }.to_owned(),
            u8::from(r.global_drift).to_string(),
            r.records.len().to_string(),
            r.n_drifted().to_string(),
            if r.is_ready() {
                num(r.max_t())
            } else {
                String::new()
            },
        ]);
    }
    t
}

fn monitor(a: MonitorArgs) -> AppResult<()> {
    let file = FileConfig::load_opt(a.common.config.as_deref())?;
    let params = MonitorParams {
        window: pick(a.window, file.window, DEFAULT_WINDOW_BATCHES),
        tau_t: pick(a.tau_t, file.tau_t, DEFAULT_TAU_T),
        min_count: pick(a.min_count, file.min_count, 0),
    };
    check(params.window >= 1, || "--window must be at least 1".into())?;
    check(params.tau_t.is_finite() && params.tau_t >= 0.0, || {
        format!(
            "--tau-t must be a non-negative number, got {}",
            params.tau_t
        )
    })?;
    let metric: MetricSpec = pick(a.metric, file.metric.clone(), "accuracy".into())
        .parse()
        .map_err(|e: driftscope_core::Error| AppError::usage(e.to_string()))?;
    let format = pick(a.format, file.format, Format::Csv);
    let bundle = load_bundle(&a.catalog)?;
    let table = read_input(&a.input)?;
    let batching = a.batching.resolve(&file, &table)?;
    let sizes = batch_sizes(&table, batching)?;
    let records = outcome_records(&table, &bundle.items, metric)?;
    let batches = encode_batches(&records, &sizes, bundle.items.n_items())?;
    let (reports, state) = run_monitor(&bundle.subgroups, &batches, params)?;
    let n_drift = reports.iter().filter(|r| r.global_drift).count();
    log::info!("{} batches, {} with drift", reports.len(), n_drift);

    let out = &a.out;
    let cfg = MonitorConfig {
        params,
        metric,
        batching: format!("{batching:?}"),
    };
    let mut manifest = Manifest::new("monitor", &cfg)?
        .input(&a.catalog)?
        .input(&a.input)?;
    let mut emit = |name: String, bytes: Vec<u8>| -> AppResult<()> {
        let p = out.join(name);
        write_atomic(&p, &bytes)?;
        manifest.output(&p);
        Ok(())
    };
    emit("reports.jsonl".into(), to_jsonl(&reports)?)?;
    emit(
        format!("summary.{}", format.extension()),
        render(&summary_table(&reports), format)?,
    )?;
    for r in reports.iter().filter(|r| r.is_ready()) {
        emit(
            format!("batches/batch_{:04}.{}", r.batch_id, format.extension()),
            render(&report_table(r, &bundle), format)?,
        )?;
    }
    emit("state.json".into(), crate::io::to_json_pretty(&state)?)?;
    emit("catalog.json".into(), crate::io::to_json_pretty(&bundle)?)?;
    manifest.write(&manifest_path(out, true))
}

fn gen(a: GenArgs) -> AppResult<()> {
    let file = FileConfig::load_opt(a.common.config.as_deref())?;
    let kind: GeneratorKind = a.dataset.into();
    let (ca, cb) = match a.concepts.as_slice() {
        [x, y] => (*x, *y),
        [] => ConceptSuiteConfig::for_generator(kind).concepts,
        _ => return Err(AppError::usage("--concepts takes two indices")),
    };
    let seed = pick(a.seed, file.seed, 0);
    let base = ConceptStreamConfig::new(kind, ca, cb, seed);
    let cfg = ConceptStreamConfig {
        drift_center: pick(a.drift_center, file.drift_center, base.drift_center),
        drift_width: pick(a.drift_width, file.drift_width, base.drift_width),
        label_noise: pick(a.label_noise, file.label_noise, base.label_noise),
        train_size: pick(a.train_size, None, base.train_size),
        n_batches: pick(a.n_batches, file.n_batches, base.n_batches),
        batch_size: pick(a.batch_size, file.batch_size, base.batch_size),
        ..base
    };
    check(cfg.label_noise >= 0.0 && cfg.label_noise < 1.0, || {
        format!("--label-noise must lie in [0, 1), got {}", cfg.label_noise)
    })?;
    check(cfg.batch_size >= 1, || {
        "--batch-size must be at least 1".into()
    })?;
    kind.check_concept(ca)
        .and_then(|_| kind.check_concept(cb))
        .map_err(|e| AppError::usage(e.to_string()))?;
    let tree_depth = a.tree_depth.or(file.tree_depth);
    let stream = gen_concept_stream(&cfg)?;
    let model = match tree_depth {
        Some(d) => Some(fit_tree(&stream.train.x, &stream.train.y, d)?),
        None => None,
    };
    let mut columns = stream.feature_names.clone();
    columns.push("y".into());
    if model.is_some() {
        columns.push("y_hat".into());
    }
    let to_row = |x: &[f64], y: u32| -> Vec<String> {
        let mut row: Vec<String> = x.iter().map(|&v| num(v)).collect();
        row.push(y.to_string());
        if let Some(m) = &model {
            row.push(m.predict(x).to_string());
        }
        row
    };
    let mut table = Table::new(
        columns
            .iter()
            .cloned()
            .chain(["batch".to_owned()])
            .collect(),
    );
    for (b, batch) in stream.batches.iter().enumerate() {
        for (x, &y) in batch.x.iter().zip(&batch.y) {
            let mut row = to_row(x, y);
            row.push((b + 1).to_string());
            table.rows.push(row);
        }
    }
    write_atomic(&a.out, &table.to_csv()?)?;
    let mut manifest = Manifest::new("gen", &(cfg.clone(), tree_depth))?.seed("stream", seed);
    manifest.output(&a.out);
    if let Some(p) = &a.train_out {
        let mut train = Table::new(columns);
        train.rows = stream
            .train
            .x
            .iter()
            .zip(&stream.train.y)
            .map(|(x, &y)| to_row(x, y))
            .collect();
        write_atomic(p, &train.to_csv()?)?;
        manifest.output(p);
    }
    manifest.write(&manifest_path(&a.out, false))
}

fn inject(a: InjectArgs) -> AppResult<()> {
    let file = FileConfig::load_opt(a.common.config.as_deref())?;
    let p_max = pick(a.p_max, file.p_max, 0.8);
    check_fraction("--p-max", p_max, true)?;
    let seed = pick(a.seed, file.seed, 0);
    let mut table = read_input(&a.input)?;
    let y_col = table
        .column("y")
        .ok_or_else(|| AppError::data("input needs a `y` column"))?;
    let items = match &a.catalog {
        Some(p) => load_bundle(p)?.items,
        None => {
            let cols = metadata_columns(&table, &[]);
            let binning = BinningConfig {
                default_bins: pick(a.bins, file.bins, 4),
                ..Default::default()
            };
            ItemCatalog::build(
                &column_names(&table, &cols),
                &raw_rows(&table, &cols),
                &binning,
            )?
        }
    };
    let target = items
        .parse_itemset(&a.subgroup)
        .map_err(|e| AppError::usage(format!("--subgroup: {e}")))?;
    let batching = match a.batching.resolve(&file, &table) {
        Ok(b) => b,
        Err(_) => Batching::Count(a.normal_batches + a.transition_batches + 10),
    };
    let sizes = batch_sizes(&table, batching)?;
    let n_batches = sizes.len();
    let drift_batches = n_batches.saturating_sub(a.normal_batches + a.transition_batches);
    let schedule = DriftSchedule {
        normal_batches: a.normal_batches,
        transition_batches: a.transition_batches,
        drift_batches,
        p_max,
        target,
        ramp: match a.ramp {
            Ramp::Linear => RampShape::Linear,
            Ramp::Sigmoid => RampShape::Sigmoid,
        },
    };
    let encoder = items.column_encoder(&table.columns);
    let row_items: Vec<Vec<u32>> = table
        .rows
        .iter()
        .map(|r| {
            encoder
                .encode(
                    &r.iter()
                        .map(|c| driftscope_core::RawValue::parse(c))
                        .collect::<Vec<_>>(),
                )
                .items
        })
        .collect();
    let labels = table
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            r[y_col]
                .trim()
                .parse::<u32>()
                .map_err(|_| AppError::data(format!("row {}: `y` must be 0 or 1", i + 1)))
        })
        .collect::<AppResult<Vec<u32>>>()?;
    let injected = inject_label_flip(
        &row_items,
        &labels,
        &sizes,
        &schedule,
        &mut SeedSplitter::new(seed).rng(0, 0),
    )?;
    let mut mask = Table::new(vec!["row".into(), "batch".into(), "altered".into()]);
    let mut row = 0;
    for (b, &s) in sizes.iter().enumerate() {
        for _ in 0..s {
            mask.rows.push(vec![
                (row + 1).to_string(),
                (b + 1).to_string(),
                u8::from(injected.altered[row]).to_string(),
            ]);
            row += 1;
        }
    }
    for (r, y) in table.rows.iter_mut().zip(&injected.labels) {
        r[y_col] = y.to_string();
    }
    if table.column("batch").is_none() {
        table.columns.push("batch".into());
        let mut b = 0;
        for (i, r) in table.rows.iter_mut().enumerate() {
            while i >= sizes[..=b].iter().sum::<usize>() {
                b += 1;
            }
            r.push((b + 1).to_string());
        }
    }
    write_atomic(&a.out, &table.to_csv()?)?;
    write_atomic(&a.mask, &mask.to_csv()?)?;
    log::info!(
        "{} of {} labels flipped",
        injected.altered.iter().filter(|&&x| x).count(),
        labels.len()
    );
    let mut manifest = Manifest::new("inject", &schedule)?
        .seed("inject", seed)
        .input(&a.input)?;
    manifest.output(&a.out);
    manifest.output(&a.mask);
    manifest.write(&manifest_path(&a.out, false))
}

fn bench_config(a: &BenchArgs, window: usize, seed: u64) -> AppResult<BaselineConfig> {
    let kind: BaselineKind = a
        .detector
        .parse()
        .map_err(|e: driftscope_core::Error| AppError::usage(e.to_string()))?;
    let cfg = match kind {
        BaselineKind::Ddm => BaselineConfig::Ddm {
            min_samples: a.min_samples.unwrap_or(4000),
        },
        BaselineKind::HddmA => BaselineConfig::HddmA {
            drift_confidence: a.confidence.unwrap_or(0.001),
            two_sided: true,
        },
        BaselineKind::PageHinkley => BaselineConfig::PageHinkley {
            min_instances: a.min_instances.unwrap_or(1000),
        },
        BaselineKind::Adwin => BaselineConfig::Adwin {
            delta: a.delta.unwrap_or(0.002),
        },
        BaselineKind::Kswin => BaselineConfig::Kswin {
            window: a.kswin_window.unwrap_or(100),
            seed,
        },
        BaselineKind::Chi2 => BaselineConfig::Chi2 {
            p_value: a.p_value.unwrap_or(0.01),
            window_batches: window,
        },
        BaselineKind::Fet => BaselineConfig::Fet {
            p_value: a.p_value.unwrap_or(0.01),
            window_batches: window,
            alternative: driftscope_core::baselines::contingency::Alternative::TwoSided,
        },
    };
    cfg.validate().map_err(|e| AppError::usage(e.to_string()))?;
    Ok(cfg)
}

fn bench(a: BenchArgs) -> AppResult<()> {
    let file = FileConfig::load_opt(a.common.config.as_deref())?;
    let window = pick(a.window, file.window, DEFAULT_WINDOW_BATCHES);
    let seed = pick(a.seed, file.seed, 0);
    check(window >= 1, || "--window must be at least 1".into())?;
    check(a.reps >= 1, || "--reps must be at least 1".into())?;
    let cfg = bench_config(&a, window, seed)?;
    let format = pick(a.format, file.format, Format::Csv);
    let table = read_input(&a.input)?;
    let sizes = batch_sizes(&table, a.batching.resolve(&file, &table)?)?;
    let out_table = match &a.catalog {
        None => {
            let flags = crate::outcomes::outcome_flags(&table, MetricSpec::Accuracy)?;
            let mut det = BaselineDetector::new(&cfg)?;
            let mut t = Table::new(vec![
                "batch".into(),
                "errors".into(),
                "size".into(),
                "decision".into(),
            ]);
            let mut start = 0;
            for (b, &s) in sizes.iter().enumerate() {
                let errors: Vec<bool> = flags[start..start + s].iter().map(|&(_, e)| e).collect();
                let d = det.update_batch(&errors);
                t.rows.push(vec![
                    (b + 1).to_string(),
                    errors.iter().filter(|&&e| e).count().to_string(),
                    s.to_string(),
                    match d {
                        Decision::NoDrift => "no_drift",
                        Decision::Warning => "warning",
                        Decision::Drift => "drift",
                    }
                    .into(),
                ]);
                start += s;
            }
            t
        }
        Some(p) => {
            let bundle = load_bundle(p)?;
            let records = outcome_records(&table, &bundle.items, MetricSpec::Accuracy)?;
            let batches = encode_batches(&records, &sizes, bundle.items.n_items())?;
            let params = MonitorParams {
                window,
                ..Default::default()
            };
            let rows = vec![
                time_sparse_pipeline(&bundle.subgroups, &batches, params, a.reps)?,
                time_per_subgroup(&bundle.subgroups, &batches, &cfg, a.reps)?,
            ];
            timing_table(&rows)
        }
    };
    let bytes = render(&out_table, format)?;
    match &a.out {
        Some(p) => {
            write_atomic(p, &bytes)?;
            let mut m = Manifest::new("bench", &cfg)?.input(&a.input)?;
            m.output(p);
            m.write(&manifest_path(p, false))
        }
        None => {
            print!("{}", String::from_utf8_lossy(&bytes));
            Ok(())
        }
    }
}

fn timing_table(rows: &[crate::experiments::timing::TimingRow]) -> Table {
    let mut t = Table::new(
        [
            "method",
            "setting",
            "n_subgroups",
            "n_samples",
            "repetitions",
            "median_batch_seconds",
            "seconds_per_sample",
            "drift_batches",
        ]
        .iter()
        .map(|s| (*s).to_owned())
        .collect(),
    );
    for r in rows {
        t.rows.push(vec![
            r.method.clone(),
            r.setting.clone(),
            r.n_subgroups.to_string(),
            r.n_samples.to_string(),
            r.repetitions.to_string(),
            num(r.median_batch_seconds),
            num(r.seconds_per_sample),
            r.drift_batches.to_string(),
        ]);
    }
    t
}

pub const RESULT_COLUMNS: [&str; 8] = [
    "suite", "group", "method", "setting", "metric", "mean", "std", "n",
];

struct Results(Table);

impl Results {
    fn new() -> Self {
        Results(Table::new(
            RESULT_COLUMNS.iter().map(|s| (*s).to_owned()).collect(),
        ))
    }

    #[allow(clippy::too_many_arguments)]
    fn push(
        &mut self,
        suite: &str,
        group: &str,
        method: &str,
        setting: &str,
        metric: &str,
        mean: Option<f64>,
        std: Option<f64>,
        n: usize,
    ) {
        self.0.rows.push(vec![
            suite.into(),
            group.into(),
            method.into(),
            setting.into(),
            metric.into(),
            opt(mean),
            opt(std),
            n.to_string(),
        ]);
    }

    fn detection(
        &mut self,
        suite: &str,
        group: &str,
        method: &str,
        setting: &str,
        s: &driftscope_core::evaluation::DetectionScores,
    ) {
        let n = s.confusion.positives() + s.confusion.negatives();
        self.push(
            suite, group, method, setting, "accuracy", s.accuracy, None, n,
        );
        self.push(suite, group, method, setting, "f1", s.f1, None, n);
        self.push(suite, group, method, setting, "fpr", s.fpr, None, n);
        self.push(suite, group, method, setting, "fnr", s.fnr, None, n);
    }
}

fn parse_baselines(names: &[String], file: &FileConfig) -> AppResult<Option<Vec<BaselineKind>>> {
    let names: Vec<String> = if names.is_empty() {
        file.baselines.clone().unwrap_or_default()
    } else {
        names.to_vec()
    };
    if names.is_empty() {
        return Ok(None);
    }
    if names.iter().any(|n| n == "all") {
        return Ok(Some(BaselineKind::ALL.to_vec()));
    }
    names
        .iter()
        .map(|n| {
            n.parse()
                .map_err(|e: driftscope_core::Error| AppError::usage(e.to_string()))
        })
        .collect::<AppResult<Vec<_>>>()
        .map(Some)
}

fn support_bands(edges: &[f64]) -> AppResult<Vec<(f64, f64)>> {
    let edges = if edges.is_empty() {
        &[0.01, 0.05][..]
    } else {
        edges
    };
    for &e in edges {
        check_fraction("--supports", e, false)?;
    }
    check(
        edges.len() >= 2 && edges.windows(2).all(|w| w[0] < w[1]),
        || "--supports needs at least two increasing edges".into(),
    )?;
    Ok(edges.windows(2).map(|w| (w[0], w[1])).collect())
}

fn band_label(b: (f64, f64)) -> String {
    format!("[{},{}]", num(b.0), num(b.1))
}

fn record_adult(results: &mut Results, suite: &str, group: &str, s: &AdultSuite) {
    results.detection(
        suite,
        group,
        "driftscope",
        &format!("tau_t={}", s.config.monitor.tau_t),
        &s.scores,
    );
    for b in &s.baselines {
        results.detection(suite, group, &b.method, &b.setting, &b.scores);
    }
    let r = &s.ranking;
    let mut push = |metric: &str, v: &crate::experiments::adult::Summary| {
        results.push(
            suite,
            group,
            "driftscope",
            "t",
            metric,
            Some(v.mean),
            Some(v.std),
            v.n,
        );
    };
    push("ndcg@10", &r.ndcg);
    push("pearson", &r.pearson);
    push("spearman", &r.spearman);
    results.push(
        suite,
        group,
        "random",
        "permutation",
        "ndcg@10",
        Some(r.random_ndcg.mean),
        Some(r.random_ndcg.std),
        r.random_ndcg.n,
    );
}

fn eval(a: EvalArgs) -> AppResult<()> {
    let file = FileConfig::load_opt(a.common.config.as_deref())?;
    let n_exp = pick(a.n_exp, file.n_exp, 20);
    let seed = pick(a.seed, file.seed, 0);
    let format = pick(a.format, file.format, Format::Csv);
    let window = pick(a.window, file.window, DEFAULT_WINDOW_BATCHES);
    let tau_t = pick(a.tau_t, file.tau_t, DEFAULT_TAU_T);
    check(n_exp >= 1, || "--n-exp must be at least 1".into())?;
    check(window >= 1, || "--window must be at least 1".into())?;
    let baselines = parse_baselines(&a.baselines, &file)?;
    let pool = thread_pool()?;
    let mut results = Results::new();
    let mut reports_jsonl: Option<Vec<u8>> = None;
    let suite_name = a
        .suite
        .to_possible_value()
        .map(|v| v.get_name().to_owned())
        .unwrap_or_default();

    let adult_baselines = baselines.clone();
    let adult_cfg = |band: (f64, f64)| -> AppResult<AdultSuiteConfig> {
        let d = AdultSuiteConfig::default();
        let cfg = AdultSuiteConfig {
            support_band: band,
            p_max: pick(a.p_max, file.p_max, d.p_max),
            n_positive: n_exp,
            n_negative: n_exp,
            tree_depth: pick(a.tree_depth, file.tree_depth, d.tree_depth),
            min_support: pick(a.min_support, file.min_support, d.min_support),
            max_len: pick(a.max_len, file.max_len, d.max_len),
            monitor: MonitorParams {
                window,
                tau_t,
                min_count: file.min_count.unwrap_or(0),
            },
            baselines: adult_baselines.clone().unwrap_or(d.baselines),
            seed,
            ..d
        };
        check_fraction("--p-max", cfg.p_max, true)?;
        check_fraction("--min-support", cfg.min_support, false)?;
        Ok(cfg)
    };
    let adult_dir = a.adult_dir.clone().unwrap_or_else(adult::default_dir);

    match a.suite {
        Suite::AdultInject | Suite::TauSweep | Suite::WindowSweep => {
            let bands = support_bands(if a.supports.is_empty() {
                file.supports.as_deref().unwrap_or(&[])
            } else {
                &a.supports
            })?;
            let data = adult::load(&adult_dir)?;
            let base = adult_cfg(bands[0])?;
            let ctx = AdultContext::prepare(&data, &base)?;
            match a.suite {
                Suite::AdultInject => {
                    for &band in &bands {
                        let cfg = AdultSuiteConfig {
                            support_band: band,
                            ..base.clone()
                        };
                        let s = run_adult_suite(&ctx, &cfg, &pool)?;
                        record_adult(&mut results, &suite_name, &band_label(band), &s);
                        results.push(
                            &suite_name,
                            &band_label(band),
                            "catalog",
                            "",
                            "n_candidates",
                            Some(s.n_candidates as f64),
                            None,
                            1,
                        );
                    }
                }
                Suite::TauSweep => {
                    let grid: Vec<f64> = (2..=20).map(|k| k as f64 * 0.5).collect();
                    for &band in &bands {
                        let s = run_adult_suite(
                            &ctx,
                            &AdultSuiteConfig {
                                support_band: band,
                                ..base.clone()
                            },
                            &pool,
                        )?;
                        let exps: Vec<_> = s.runs.iter().map(|r| r.experiment.clone()).collect();
                        for p in youden_curve(&exps, &grid) {
                            let setting = format!("tau_t={}", num(p.tau));
                            let g = band_label(band);
                            results.push(
                                &suite_name,
                                &g,
                                "driftscope",
                                &setting,
                                "youden_j",
                                Some(p.j),
                                None,
                                exps.len(),
                            );
                            results.push(
                                &suite_name,
                                &g,
                                "driftscope",
                                &setting,
                                "tpr",
                                Some(p.tpr),
                                None,
                                exps.len(),
                            );
                            results.push(
                                &suite_name,
                                &g,
                                "driftscope",
                                &setting,
                                "tnr",
                                Some(p.tnr),
                                None,
                                exps.len(),
                            );
                        }
                        if let Some(best) = driftscope_core::evaluation::youden_sweep(&exps, &grid)
                        {
                            results.push(
                                &suite_name,
                                &band_label(band),
                                "driftscope",
                                "best",
                                "tau_t",
                                Some(best.tau),
                                None,
                                exps.len(),
                            );
                        }
                    }
                }
                _ => {
                    for w in [2usize, 3, 5, 7, 10] {
                        let cfg = AdultSuiteConfig {
                            monitor: MonitorParams {
                                window: w,
                                ..base.monitor
                            },
                            baselines: Vec::new(),
                            ..base.clone()
                        };
                        let s = run_adult_suite(&ctx, &cfg, &pool)?;
                        results.detection(
                            &suite_name,
                            &band_label(base.support_band),
                            "driftscope",
                            &format!("W={w}"),
                            &s.scores,
                        );
                        results.push(
                            &suite_name,
                            &band_label(base.support_band),
                            "driftscope",
                            &format!("W={w}"),
                            "ndcg@10",
                            Some(s.ranking.ndcg.mean),
                            Some(s.ranking.ndcg.std),
                            s.ranking.ndcg.n,
                        );
                    }
                }
            }
        }
        Suite::Agrawal | Suite::Sea | Suite::Led | Suite::Hyperplane => {
            let kind = match a.suite {
                Suite::Agrawal => GeneratorKind::Agrawal,
                Suite::Sea => GeneratorKind::Sea,
                Suite::Led => GeneratorKind::Led,
                _ => GeneratorKind::Hyperplane,
            };
            let d = ConceptSuiteConfig::for_generator(kind);
            let concepts = match a.concepts.as_slice() {
                [x, y] => (*x, *y),
                [] => d.concepts,
                _ => return Err(AppError::usage("--concepts takes two indices")),
            };
            kind.check_concept(concepts.0)
                .and_then(|_| kind.check_concept(concepts.1))
                .map_err(|e| AppError::usage(e.to_string()))?;
            let cfg = ConceptSuiteConfig {
                concepts,
                n_positive: n_exp,
                n_negative: n_exp,
                tree_depth: pick(a.tree_depth, file.tree_depth, d.tree_depth),
                min_support: pick(a.min_support, file.min_support, d.min_support),
                max_len: pick(a.max_len, file.max_len, d.max_len),
                label_noise: pick(None, file.label_noise, d.label_noise),
                monitor: MonitorParams {
                    window,
                    tau_t,
                    min_count: file.min_count.unwrap_or(0),
                },
                baselines: baselines.clone().unwrap_or_default(),
                seed,
                keep_reports: a.reports_out.is_some(),
                ..d
            };
            check_fraction("--min-support", cfg.min_support, false)?;
            let s: ConceptSuite = run_concept_suite(&cfg, &pool)?;
            let group = format!("{}->{}", concepts.0, concepts.1);
            results.detection(
                &suite_name,
                &group,
                "driftscope",
                &format!("tau_t={tau_t}"),
                &s.scores,
            );
            for b in &s.baselines {
                results.detection(&suite_name, &group, &b.method, &b.setting, &b.scores);
            }
            reports_jsonl = Some(s.reports_jsonl()?);
        }
        Suite::Timing => {
            let data = adult::load(&adult_dir)?;
            let supports = if a.supports.is_empty() {
                vec![0.05]
            } else {
                a.supports.clone()
            };
            let kinds = baselines.unwrap_or_else(|| vec![BaselineKind::Ddm]);
            for s in supports {
                check_fraction("--supports", s, false)?;
                let base = adult_cfg((0.01, 0.05))?;
                let ctx = AdultContext::prepare_with(
                    &data,
                    &base,
                    s,
                    pick(a.max_len, file.max_len, DEFAULT_MAX_LEN),
                )?;
                let perm: Vec<usize> = (0..ctx.test_labels.len()).collect();
                let records = ctx.records(&perm, &ctx.test_labels);
                let sizes = crate::outcomes::equal_batches(records.len(), base.n_batches);
                let batches = encode_batches(&records, &sizes, ctx.items.n_items())?;
                let group = format!("s={}", num(s));
                let mut rows = vec![time_sparse_pipeline(
                    &ctx.subgroups,
                    &batches,
                    base.monitor,
                    5,
                )?];
                for k in &kinds {
                    let cfg = k.grid(window)[0].with_seed(seed);
                    rows.push(time_per_subgroup(&ctx.subgroups, &batches, &cfg, 5)?);
                }
                for r in rows {
                    results.push(
                        &suite_name,
                        &group,
                        &r.method,
                        &r.setting,
                        "seconds_per_sample",
                        Some(r.seconds_per_sample),
                        None,
                        r.repetitions,
                    );
                    results.push(
                        &suite_name,
                        &group,
                        &r.method,
                        &r.setting,
                        "median_batch_seconds",
                        Some(r.median_batch_seconds),
                        None,
                        r.repetitions,
                    );
                    results.push(
                        &suite_name,
                        &group,
                        &r.method,
                        &r.setting,
                        "n_subgroups",
                        Some(r.n_subgroups as f64),
                        None,
                        1,
                    );
                }
            }
        }
    }

    write_atomic(&a.out, &render(&results.0, format)?)?;
    #[derive(Serialize)]
    struct EvalConfig<'a> {
        suite: &'a str,
        n_exp: usize,
        window: usize,
        tau_t: f64,
        supports: &'a [f64],
    }
    let mut manifest = Manifest::new(
        "eval",
        &EvalConfig {
            suite: &suite_name,
            n_exp,
            window,
            tau_t,
            supports: &a.supports,
        },
    )?
    .seed("root", seed);
    manifest.output(&a.out);
    if let (Some(p), Some(bytes)) = (&a.reports_out, reports_jsonl) {
        write_atomic(p, &bytes)?;
        manifest.output(p);
    }
    manifest.write(&manifest_path(&a.out, false))
}

fn report(a: ReportArgs) -> AppResult<()> {
    let file = FileConfig::load_opt(a.common.config.as_deref())?;
    let top = pick(a.top, file.top, 20);
    let prune_t = a.prune_t.or(file.prune_t);
    let format = pick(a.format, file.format, Format::Md);
    if let Some(t) = prune_t {
        check(t.is_finite() && t >= 0.0, || {
            format!("--prune-t must be non-negative, got {t}")
        })?;
    }
    let catalog_path = a
        .catalog
        .clone()
        .unwrap_or_else(|| a.reports.join("catalog.json"));
    let bundle = load_bundle(&catalog_path)?;
    let reports: Vec<DriftReport> = read_jsonl(&a.reports.join("reports.jsonl"))?;
    let chosen = match a.batch {
        Some(b) => reports
            .iter()
            .find(|r| r.batch_id == b)
            .ok_or_else(|| AppError::usage(format!("no report for batch {b}")))?,
        None => reports
            .iter()
            .rev()
            .find(|r| r.is_ready())
            .ok_or_else(|| AppError::data("no scored report yet"))?,
    };
    let ranked = rank(chosen, &bundle.subgroups, usize::MAX);
    let kept = match prune_t {
        Some(t) => redundancy_prune(&ranked, t),
        None => ranked.clone(),
    };
    let mut table = Table::new(
        [
            "rank",
            "subgroup_id",
            "items",
            "support",
            "t",
            "delta_h",
            "drifted",
        ]
        .iter()
        .map(|s| (*s).to_owned())
        .collect(),
    );
    for (i, e) in kept.entries.iter().take(top).enumerate() {
        table.rows.push(vec![
            (i + 1).to_string(),
            e.subgroup.to_string(),
            bundle.items.describe(&e.items),
            num(e.support),
            num(e.t_value),
            opt(e.delta_h),
            u8::from(chosen.record(e.subgroup).is_some_and(|r| r.drifted)).to_string(),
        ]);
    }
    let mut outputs = vec![("ranking", table)];
    if a.shapley {
        let global = shapley_global(chosen, &bundle.subgroups)?;
        let mut g = Table::new(vec!["item".into(), "shapley".into()]);
        for (item, v) in global.by_magnitude() {
            g.rows.push(vec![bundle.items.describe(&[item]), num(v)]);
        }
        let values = ReportValues::new(chosen, &bundle.subgroups);
        let mut l = Table::new(vec![
            "rank".into(),
            "subgroup".into(),
            "item".into(),
            "shapley".into(),
        ]);
        for (i, e) in kept.entries.iter().take(top).enumerate() {
            match shapley_local(&e.items, |s| values.value(s)) {
                Ok(attr) => {
                    for (item, v) in attr.by_magnitude() {
                        l.rows.push(vec![
                            (i + 1).to_string(),
                            bundle.items.describe(&e.items),
                            bundle.items.describe(&[item]),
                            num(v),
                        ]);
                    }
                }
                Err(err) => log::warn!(
                    "no attribution for {}: {err}",
                    bundle.items.describe(&e.items)
                ),
            }
        }
        outputs.push(("shapley_global", g));
        outputs.push(("shapley_local", l));
    }
    match &a.out {
        Some(dir) => {
            #[derive(Serialize)]
            struct ReportConfig {
                batch_id: u64,
                prune_t: Option<f64>,
                top: usize,
                shapley: bool,
            }
            let mut m = Manifest::new(
                "report",
                &ReportConfig {
                    batch_id: chosen.batch_id,
                    prune_t,
                    top,
                    shapley: a.shapley,
                },
            )?
            .input(&catalog_path)?
            .input(&a.reports.join("reports.jsonl"))?;
            for (name, t) in &outputs {
                let p = dir.join(format!("{name}.{}", format.extension()));
                write_atomic(&p, &render(t, format)?)?;
                m.output(&p);
            }
            m.write(&manifest_path(dir, true))
        }
        None => {
            for (name, t) in &outputs {
                if outputs.len() > 1 {
                    println!("{name}");
                }
                print!("{}", String::from_utf8_lossy(&render(t, format)?));
            }
            Ok(())
        }
    }
}
