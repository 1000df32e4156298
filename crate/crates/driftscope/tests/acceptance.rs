//! End-to-end acceptance suite: one PASS/FAIL line per criterion, non-zero
//! exit when any criterion fails.

use std::collections::BTreeSet;
use std::time::Instant;

use driftscope::adult;
use driftscope::experiments::adult::{run_adult_suite, AdultContext, AdultSuite, AdultSuiteConfig};
use driftscope::experiments::concept::{run_concept_suite, ConceptSuiteConfig};
use driftscope::experiments::thread_pool;
use driftscope::experiments::timing::{time_per_subgroup, time_sparse_pipeline};
use driftscope::outcomes::equal_batches;
use driftscope::pipeline::{encode_batches, run_monitor, MonitorParams};
use driftscope_core::baselines::{BaselineConfig, BaselineKind};
use driftscope_core::detector::{beta_posterior, welch_t};
use driftscope_core::explain::{rank, redundancy_prune, shapley_local, ReportValues};
use driftscope_core::mining::{mine_frequent, MiningConfig, Subgroup, SubgroupCatalog};
use driftscope_core::sgmetrics::{membership, EncodedBatch};
use driftscope_core::sparse::CsrPattern;
use driftscope_core::streams::GeneratorKind;
use driftscope_core::OutcomeRecord;
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn random_itemset(rng: &mut StdRng, n_items: u32, max_len: usize) -> Vec<u32> {
    let len = rng.gen_range(0..=max_len);
    let set: BTreeSet<u32> = (0..len).map(|_| rng.gen_range(0..n_items)).collect();
    set.into_iter().collect()
}

fn is_subset(small: &[u32], big: &[u32]) -> bool {
    small.iter().all(|x| big.binary_search(x).is_ok())
}

fn membership_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(1);
    let n_items = 40;
    let records: Vec<OutcomeRecord> = (0..1000)
        .map(|_| {
            let items = random_itemset(&mut rng, n_items, 20);
            let ok = rng.gen_bool(0.8);
            OutcomeRecord {
                items,
                alpha: ok,
                beta: !ok,
            }
        })
        .collect();
    let mut seen = BTreeSet::new();
    while seen.len() < 500 {
        let s = random_itemset(&mut rng, n_items, 4);
        if !s.is_empty() {
            seen.insert(s);
        }
    }
    let subgroups = seen
        .into_iter()
        .map(|items| Subgroup {
            items,
            support: 0.0,
            count: 0,
            index: 0,
        })
        .collect();
    let catalog =
        SubgroupCatalog::from_subgroups(subgroups, n_items as usize, 1, MiningConfig::default())
            .unwrap();
    let batch = EncodedBatch::encode(&records, n_items as usize, 1).unwrap();
    let m = membership(&batch, &catalog).unwrap();
    let mut mismatches = 0;
    for (i, r) in records.iter().enumerate() {
        for g in catalog.subgroups() {
            if is_subset(&g.items, &r.items) != m.contains(i, g.index as u32) {
                mismatches += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        mismatches == 0 && secs < 5.0,
        format!(
            "{mismatches} mismatches over 1000x{} pairs, {secs:.2}s",
            catalog.len()
        ),
    )
}

fn statistic_fixtures() -> Outcome {
    let p = beta_posterior(8, 2);
    let t = welch_t(beta_posterior(50, 0), beta_posterior(25, 25));
    let errs = [
        (p.mu - 0.75).abs(),
        (p.nu - 0.014_423_076_923_076_924).abs(),
        (t - 6.750_108_257_321_292).abs(),
    ];
    let worst = errs.iter().cloned().fold(0.0, f64::max);
    outcome(
        worst <= 1e-9,
        format!("mu={} nu={} t={t}, max abs error {worst:e}", p.mu, p.nu),
    )
}

fn mining_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(3);
    let mut failures = 0;
    let mut compared = 0;
    for _ in 0..20 {
        let n_items = rng.gen_range(4..=12u32);
        let n_rows = rng.gen_range(1..=200);
        let rows: Vec<Vec<u32>> = (0..n_rows)
            .map(|_| random_itemset(&mut rng, n_items, n_items as usize))
            .collect();
        let points =
            CsrPattern::from_rows(n_items as usize, rows.iter().map(|r| r.as_slice())).unwrap();
        for s in [0.1, 0.3, 0.5] {
            let cat = mine_frequent(
                &points,
                None,
                &MiningConfig::new(s, n_items as usize).unwrap(),
            )
            .unwrap();
            let mined: BTreeSet<Vec<u32>> =
                cat.subgroups().iter().map(|g| g.items.clone()).collect();
            let mut expected = BTreeSet::new();
            for mask in 0u32..(1 << n_items) {
                let set: Vec<u32> = (0..n_items).filter(|i| mask >> i & 1 == 1).collect();
                let count = rows.iter().filter(|r| is_subset(&set, r)).count();
                if count as f64 / n_rows as f64 >= s {
                    expected.insert(set);
                }
            }
            compared += 1;
            failures += usize::from(mined != expected);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        failures == 0 && secs < 30.0,
        format!("{failures}/{compared} mismatching catalogs, {secs:.2}s"),
    )
}

struct ConceptResults {
    detail: Vec<String>,
    pass4: bool,
    pass10: bool,
}

fn concept_suites(pool: &rayon::ThreadPool) -> ConceptResults {
    let mut detail = Vec::new();
    let (mut pass4, mut pass10) = (true, true);
    for kind in [GeneratorKind::Agrawal, GeneratorKind::Sea] {
        let cfg = ConceptSuiteConfig {
            keep_reports: true,
            ..ConceptSuiteConfig::for_generator(kind)
        };
        let start = Instant::now();
        let suite = run_concept_suite(&cfg, pool).unwrap();
        let secs = start.elapsed().as_secs_f64();
        let f1 = suite.scores.f1.unwrap_or(0.0);
        pass4 &= f1 >= 0.9 && secs < 300.0;
        detail.push(format!("{} F1={f1:.3} in {secs:.1}s", kind.name()));
        let again = run_concept_suite(&cfg, pool).unwrap();
        let (a, b) = (
            suite.reports_jsonl().unwrap(),
            again.reports_jsonl().unwrap(),
        );
        pass10 &= !a.is_empty() && a == b;
    }
    ConceptResults {
        detail,
        pass4,
        pass10,
    }
}

fn adult_suite(ctx: &AdultContext, pool: &rayon::ThreadPool) -> (AdultSuite, f64) {
    let cfg = AdultSuiteConfig {
        baselines: vec![BaselineKind::Ddm],
        ..AdultSuiteConfig::default()
    };
    let start = Instant::now();
    let suite = run_adult_suite(ctx, &cfg, pool).unwrap();
    (suite, start.elapsed().as_secs_f64())
}

fn shapley_efficiency(data: &adult::AdultData) -> Outcome {
    let cfg = AdultSuiteConfig::default();
    let ctx = AdultContext::prepare_with(data, &cfg, 0.05, 6).unwrap();
    let perm: Vec<usize> = (0..ctx.test_labels.len()).collect();
    let records = ctx.records(&perm, &ctx.test_labels);
    let batches = encode_batches(
        &records,
        &equal_batches(records.len(), cfg.n_batches),
        ctx.items.n_items(),
    )
    .unwrap();
    let (reports, _) = run_monitor(&ctx.subgroups, &batches, MonitorParams::default()).unwrap();
    let report = reports.last().unwrap();
    let values = ReportValues::new(report, &ctx.subgroups);
    let v_empty = values.value(&[]).unwrap();
    let mut candidates: Vec<&Subgroup> = ctx
        .subgroups
        .subgroups()
        .iter()
        .filter(|g| !g.items.is_empty())
        .collect();
    candidates.shuffle(&mut StdRng::seed_from_u64(7));
    let picked = &candidates[..100.min(candidates.len())];
    let mut worst = 0.0f64;
    for g in picked {
        let phi = shapley_local(&g.items, |s| values.value(s)).unwrap();
        let gap = (phi.total() - (values.value(&g.items).unwrap() - v_empty)).abs();
        worst = worst.max(gap);
    }
    let longest = picked.iter().map(|g| g.items.len()).max().unwrap_or(0);
    outcome(
        picked.len() == 100 && worst <= 1e-12,
        format!(
            "{} subgroups up to |S|={longest}, max efficiency gap {worst:e}",
            picked.len()
        ),
    )
}

fn pruning_soundness(suite: &AdultSuite, ctx: &AdultContext) -> Outcome {
    let mut violations = 0;
    let mut identity = true;
    let mut pruned_total = 0;
    for run in &suite.runs {
        let ranked = rank(&run.final_report, &ctx.subgroups, usize::MAX);
        identity &= redundancy_prune(&ranked, 0.0) == ranked;
        for threshold in [0.5, 1.0, 2.0] {
            let pruned = redundancy_prune(&ranked, threshold);
            let kept: BTreeSet<&[u32]> =
                pruned.entries.iter().map(|e| e.items.as_slice()).collect();
            for e in &ranked.entries {
                if kept.contains(e.items.as_slice()) {
                    continue;
                }
                pruned_total += 1;
                let covered = pruned.entries.iter().any(|p| {
                    p.items.len() < e.items.len()
                        && is_subset(&p.items, &e.items)
                        && (p.t_value - e.t_value).abs() < threshold
                });
                violations += usize::from(!covered);
            }
        }
    }
    outcome(
        violations == 0 && identity,
        format!("{violations} violations over {pruned_total} pruned itemsets, threshold 0 identity: {identity}"),
    )
}

fn timing(data: &adult::AdultData) -> Outcome {
    let start = Instant::now();
    let cfg = AdultSuiteConfig::default();
    let ctx = AdultContext::prepare_with(data, &cfg, 0.05, cfg.max_len).unwrap();
    let perm: Vec<usize> = (0..ctx.test_labels.len()).collect();
    let records = ctx.records(&perm, &ctx.test_labels);
    let batches = encode_batches(
        &records,
        &equal_batches(records.len(), cfg.n_batches),
        ctx.items.n_items(),
    )
    .unwrap();
    let sparse = time_sparse_pipeline(&ctx.subgroups, &batches, cfg.monitor, 5).unwrap();
    let ddm = time_per_subgroup(
        &ctx.subgroups,
        &batches,
        &BaselineConfig::Ddm { min_samples: 30 },
        5,
    )
    .unwrap();
    let ratio = ddm.median_batch_seconds / sparse.median_batch_seconds;
    let secs = start.elapsed().as_secs_f64();
    outcome(
        ratio >= 10.0 && secs < 300.0,
        format!(
            "{} subgroups, sparse {:.2e}s vs per-subgroup ddm {:.2e}s per batch, speedup {ratio:.1}x, {secs:.1}s",
            ctx.subgroups.len(),
            sparse.median_batch_seconds,
            ddm.median_batch_seconds
        ),
    )
}

fn main() {
    let pool = thread_pool().unwrap();
    let mut results: Vec<(u32, Outcome)> = Vec::new();
    let mut report = |n: u32, o: Outcome| {
        println!(
            "criterion {n:>2} {}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        results.push((n, o));
    };

    report(1, membership_oracle());
    report(2, statistic_fixtures());
    report(3, mining_oracle());

    let concept = concept_suites(&pool);
    report(4, outcome(concept.pass4, concept.detail.join("; ")));

    let data = adult::load(&adult::default_dir()).expect("adult data");
    let ctx = AdultContext::prepare(&data, &AdultSuiteConfig::default()).unwrap();
    let (suite, secs) = adult_suite(&ctx, &pool);
    let di = suite.scores.f1.unwrap_or(0.0);
    let ddm = suite
        .baselines
        .iter()
        .find(|b| b.method == "ddm")
        .and_then(|b| b.scores.f1)
        .unwrap_or(0.0);
    report(
        5,
        outcome(
            di > ddm && secs < 600.0,
            format!("driftscope F1={di:.3} vs ddm F1={ddm:.3}, {secs:.1}s"),
        ),
    );
    let r = &suite.ranking;
    let bar = r.random_ndcg.mean + 3.0 * r.random_ndcg.std;
    report(
        6,
        outcome(
            r.ndcg.mean >= bar,
            format!(
                "nDCG@10 {:.3} vs random {:.3} + 3 x {:.3} = {bar:.3}",
                r.ndcg.mean, r.random_ndcg.mean, r.random_ndcg.std
            ),
        ),
    );
    report(7, shapley_efficiency(&data));
    report(8, pruning_soundness(&suite, &ctx));
    report(9, timing(&data));
    report(
        10,
        outcome(
            concept.pass10,
            "reports of both concept suites byte-identical across two runs".into(),
        ),
    );

    let failed: Vec<u32> = results
        .iter()
        .filter(|(_, o)| !o.pass)
        .map(|(n, _)| *n)
        .collect();
    println!(
        "{} of {} criteria passed",
        results.len() - failed.len(),
        results.len()
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
