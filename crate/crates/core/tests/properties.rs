use std::collections::BTreeSet;

use driftscope_core::baselines::{fisher_exact, Alternative, Table2x2};
use driftscope_core::detector::{
    beta_posterior, compare_windows, welch_t, MonitorState, WindowConfig,
};
use driftscope_core::evaluation::{ndcg_at_k, youden_sweep, Experiment, ExperimentKind};
use driftscope_core::explain::{redundancy_prune, shapley_local, RankedEntry, RankedReport};
use driftscope_core::mining::{mine_frequent, MiningConfig, Subgroup, SubgroupCatalog};
use driftscope_core::sgmetrics::{aggregate, membership, EncodedBatch, SubgroupStats};
use driftscope_core::sparse::CsrPattern;
use driftscope_core::OutcomeRecord;
use proptest::prelude::*;

fn itemset(n_items: u32, max_len: usize) -> impl Strategy<Value = Vec<u32>> {
    prop::collection::btree_set(0..n_items, 0..=max_len).prop_map(|s| s.into_iter().collect())
}

fn records(n_items: u32) -> impl Strategy<Value = Vec<OutcomeRecord>> {
    prop::collection::vec((itemset(n_items, n_items as usize), 0u8..3), 1..60).prop_map(|rows| {
        rows.into_iter()
            .map(|(items, o)| OutcomeRecord {
                items,
                alpha: o == 1,
                beta: o == 2,
            })
            .collect()
    })
}

fn catalog_of(itemsets: &[Vec<u32>], n_items: usize) -> SubgroupCatalog {
    let subgroups = itemsets
        .iter()
        .map(|s| Subgroup {
            items: s.clone(),
            support: 0.0,
            count: 0,
            index: 0,
        })
        .collect();
    SubgroupCatalog::from_subgroups(subgroups, n_items, 1, MiningConfig::default()).unwrap()
}

fn is_subset(small: &[u32], big: &[u32]) -> bool {
    small.iter().all(|x| big.binary_search(x).is_ok())
}

/// All itemsets (attribute-free) with relative support >= s, by enumeration.
fn exhaustive_frequent(
    rows: &[Vec<u32>],
    n_items: u32,
    s: f64,
    max_len: usize,
) -> BTreeSet<Vec<u32>> {
    let n = rows.len() as f64;
    let mut out = BTreeSet::new();
    for mask in 0u32..(1 << n_items) {
        let set: Vec<u32> = (0..n_items).filter(|i| mask >> i & 1 == 1).collect();
        if set.len() > max_len {
            continue;
        }
        let count = rows.iter().filter(|r| is_subset(&set, r)).count() as f64;
        if count / n >= s {
            out.insert(set);
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn membership_equals_subset_checks(
        recs in records(12),
        sets in prop::collection::vec(itemset(12, 4), 1..30),
    ) {
        let cat = catalog_of(&sets, 12);
        let batch = EncodedBatch::encode(&recs, 12, 1).unwrap();
        let m = membership(&batch, &cat).unwrap();
        for (i, r) in recs.iter().enumerate() {
            for (j, s) in cat.subgroups().iter().enumerate() {
                prop_assert_eq!(m.contains(i, j as u32), is_subset(&s.items, &r.items));
            }
        }
    }

    #[test]
    fn aggregate_matches_direct_counts(recs in records(8), sets in prop::collection::vec(itemset(8, 3), 1..10)) {
        let cat = catalog_of(&sets, 8);
        let batch = EncodedBatch::encode(&recs, 8, 1).unwrap();
        let stats = aggregate(&batch, &membership(&batch, &cat).unwrap()).unwrap();
        for (j, s) in cat.subgroups().iter().enumerate() {
            let members = recs.iter().filter(|r| is_subset(&s.items, &r.items));
            let (a, b) = members.fold((0, 0), |(a, b), r| (a + r.alpha as u64, b + r.beta as u64));
            prop_assert_eq!(stats.counts(j), (a, b));
        }
    }

    #[test]
    fn mining_equals_exhaustive_enumeration(
        rows in prop::collection::vec(itemset(8, 8), 1..80),
        s in prop::sample::select(vec![0.1, 0.25, 0.5, 0.9]),
        max_len in 1usize..5,
    ) {
        let points = CsrPattern::from_rows(8, rows.iter().map(|r| r.as_slice())).unwrap();
        let cat = mine_frequent(&points, None, &MiningConfig::new(s, max_len).unwrap()).unwrap();
        let mined: BTreeSet<Vec<u32>> = cat.subgroups().iter().map(|g| g.items.clone()).collect();
        prop_assert_eq!(&mined, &exhaustive_frequent(&rows, 8, s, max_len));
        for g in cat.subgroups() {
            let count = rows.iter().filter(|r| is_subset(&g.items, r)).count() as u64;
            prop_assert_eq!(g.count, count);
        }
    }

    #[test]
    fn attribute_exclusivity_holds(rows in prop::collection::vec(itemset(6, 6), 1..40)) {
        let attrs = [0u32, 0, 1, 1, 2, 2];
        let points = CsrPattern::from_rows(6, rows.iter().map(|r| r.as_slice())).unwrap();
        let cat = mine_frequent(&points, Some(&attrs), &MiningConfig::new(0.05, 6).unwrap()).unwrap();
        for g in cat.subgroups() {
            let used: BTreeSet<u32> = g.items.iter().map(|&i| attrs[i as usize]).collect();
            prop_assert_eq!(used.len(), g.items.len());
        }
    }

    #[test]
    fn merge_is_associative_and_commutative(
        counts in prop::collection::vec(prop::collection::vec((0u64..50, 0u64..50), 4), 3),
    ) {
        let stats: Vec<SubgroupStats> = counts
            .iter()
            .map(|c| SubgroupStats {
                alpha: c.iter().map(|x| x.0).collect(),
                beta: c.iter().map(|x| x.1).collect(),
                n_instances: c.iter().map(|x| x.0 + x.1).sum(),
            })
            .collect();
        let ab = SubgroupStats::merge([&stats[0], &stats[1]]).unwrap();
        let left = SubgroupStats::merge([&ab, &stats[2]]).unwrap();
        let bc = SubgroupStats::merge([&stats[1], &stats[2]]).unwrap();
        let right = SubgroupStats::merge([&stats[0], &bc]).unwrap();
        prop_assert_eq!(&left, &right);
        prop_assert_eq!(&left, &SubgroupStats::merge([&stats[2], &stats[0], &stats[1]]).unwrap());
    }

    #[test]
    fn sliding_window_equals_recomputation(
        batches in prop::collection::vec(prop::collection::vec((0u64..20, 0u64..20), 3), 1..25),
        w in 1usize..5,
    ) {
        let stats: Vec<SubgroupStats> = batches
            .iter()
            .map(|c| SubgroupStats {
                alpha: c.iter().map(|x| x.0).collect(),
                beta: c.iter().map(|x| x.1).collect(),
                n_instances: 0,
            })
            .collect();
        let mut state = MonitorState::new(WindowConfig::new(w).unwrap());
        for (k, s) in stats.iter().enumerate() {
            let report = state.step(s.clone(), 5.0, 0).unwrap();
            prop_assert_eq!(report.batch_id, k as u64 + 1);
            prop_assert_eq!(report.is_ready(), k + 1 >= 2 * w);
            if k + 1 >= w {
                let reference = SubgroupStats::merge(&stats[..w]).unwrap();
                prop_assert_eq!(state.reference().unwrap(), &reference);
            }
            if report.is_ready() {
                let current = SubgroupStats::merge(&stats[k + 1 - w..=k]).unwrap();
                prop_assert_eq!(state.current().unwrap(), &current);
                let direct = compare_windows(state.reference().unwrap(), &current, 5.0, 0).unwrap();
                prop_assert_eq!(&report.records, &direct);
            }
        }
    }

    #[test]
    fn welch_t_is_symmetric_and_nonnegative(a in 0u64..500, b in 0u64..500, c in 0u64..500, d in 0u64..500) {
        let (r, k) = (beta_posterior(a, b), beta_posterior(c, d));
        let t = welch_t(r, k);
        prop_assert!(t >= 0.0);
        prop_assert_eq!(t, welch_t(k, r));
        prop_assert!(r.mu > 0.0 && r.mu < 1.0 && r.nu > 0.0);
    }

    #[test]
    fn shapley_efficiency_symmetry_null(values in prop::collection::vec(-1.0f64..1.0, 32)) {
        let items = [3u32, 5, 8, 11, 20];
        let index = |t: &[u32]| -> usize {
            t.iter().map(|x| 1usize << items.iter().position(|y| y == x).unwrap()).sum()
        };
        let phi = shapley_local(&items, |t| Ok(values[index(t)])).unwrap();
        let total: f64 = phi.contributions.iter().map(|(_, v)| v).sum();
        prop_assert!((total - (values[31] - values[0])).abs() < 1e-12);

        // item 20 is a null player under a value function that ignores it
        let ignore = |t: &[u32]| -> f64 { values[index(t) & 0b01111] };
        let phi = shapley_local(&items, |t| Ok(ignore(t))).unwrap();
        prop_assert_eq!(phi.get(20).unwrap(), 0.0);

        // 3 and 5 are interchangeable when v depends on them only through their count
        let sym = |t: &[u32]| -> f64 {
            let m = index(t);
            let k = (m & 1) + ((m >> 1) & 1);
            values[(m & !0b11) | ((1 << k) - 1)]
        };
        let phi = shapley_local(&items, |t| Ok(sym(t))).unwrap();
        prop_assert!((phi.get(3).unwrap() - phi.get(5).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn pruning_is_sound(
        sets in prop::collection::btree_set(itemset(6, 3), 1..30),
        ts in prop::collection::vec(0.0f64..40.0, 30),
        threshold in 0.0f64..10.0,
    ) {
        let entries: Vec<RankedEntry> = sets
            .iter()
            .filter(|s| !s.is_empty())
            .enumerate()
            .map(|(k, s)| RankedEntry { subgroup: k + 1, items: s.clone(), support: 0.1, t_value: ts[k], delta_h: None })
            .collect();
        let ranked = RankedReport { entries };
        let pruned = redundancy_prune(&ranked, threshold);
        let kept: BTreeSet<Vec<u32>> = pruned.entries.iter().map(|e| e.items.clone()).collect();
        for e in &ranked.entries {
            if kept.contains(&e.items) {
                continue;
            }
            let covered = pruned.entries.iter().any(|p| {
                p.items.len() < e.items.len() && is_subset(&p.items, &e.items) && (p.t_value - e.t_value).abs() < threshold
            });
            prop_assert!(covered, "pruned {:?} without a surviving ancestor", e.items);
        }
        for w in pruned.entries.windows(2) {
            prop_assert!(w[0].t_value >= w[1].t_value);
        }
        prop_assert_eq!(redundancy_prune(&ranked, 0.0).entries.len(), ranked.entries.len());
    }

    #[test]
    fn ndcg_is_bounded(rel in prop::collection::vec(0.0f64..1.0, 1..40), k in 1usize..15) {
        let v = ndcg_at_k(&rel, k);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&v));
        let mut sorted = rel.clone();
        sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
        prop_assert!((ndcg_at_k(&sorted, k) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn youden_invariant_to_balanced_duplication(
        scores in prop::collection::vec((0.0f64..20.0, 0.0f64..20.0), 1..8),
        same in 0.0f64..20.0,
        copies in 1usize..4,
    ) {
        let make = |kind, s: f64| Experiment::from_scores(kind, vec![s], 5.0);
        let mut suite: Vec<Experiment> = Vec::new();
        for &(p, n) in &scores {
            suite.push(make(ExperimentKind::Positive, p));
            suite.push(make(ExperimentKind::Negative, n));
        }
        let grid: Vec<f64> = (0..=20).map(f64::from).collect();
        let base = youden_sweep(&suite, &grid).unwrap();
        for _ in 0..copies {
            suite.push(make(ExperimentKind::Positive, same));
            suite.push(make(ExperimentKind::Negative, same));
        }
        let after = youden_sweep(&suite, &grid).unwrap();
        // on a balanced suite every J shrinks by the same factor P / (P + m)
        prop_assert_eq!(base.tau, after.tau);
    }
}

/// Exact binomial coefficients from Pascal's triangle (f64 is exact enough
/// for relative error far below the test tolerance at n <= 200).
fn pascal(n: usize) -> Vec<Vec<f64>> {
    let mut rows = vec![vec![1.0]];
    for i in 1..=n {
        let prev = &rows[i - 1];
        let mut row = vec![1.0; i + 1];
        for k in 1..i {
            row[k] = prev[k - 1] + prev[k];
        }
        rows.push(row);
    }
    rows
}

#[test]
fn fisher_matches_hypergeometric_enumeration() {
    let c = pascal(200);
    let tables = [
        (0u64, 50u64, 25u64, 25u64),
        (3, 1, 1, 3),
        (10, 40, 20, 30),
        (1, 99, 9, 91),
        (45, 55, 60, 40),
        (0, 0, 3, 5),
        (7, 0, 0, 7),
    ];
    for &(a, b, cc, d) in &tables {
        let (r1, r2, c1) = (a + b, cc + d, a + cc);
        let n = r1 + r2;
        let prob = |x: u64| {
            c[r1 as usize][x as usize] * c[r2 as usize][(c1 - x) as usize]
                / c[n as usize][c1 as usize]
        };
        let lo = c1.saturating_sub(r2);
        let hi = r1.min(c1);
        let p_obs = prob(a);
        let two: f64 = (lo..=hi)
            .map(prob)
            .filter(|&p| p <= p_obs * (1.0 + 1e-7))
            .sum();
        let greater: f64 = (lo..=a).map(prob).sum();
        let t = Table2x2::new(a, b, cc, d);
        let got = fisher_exact(&t, Alternative::TwoSided);
        assert!(
            (got - two.min(1.0)).abs() <= 1e-9 * two.max(1e-300) + 1e-15,
            "{t:?}: {got} vs {two}"
        );
        let got = fisher_exact(&t, Alternative::Greater);
        assert!(
            (got - greater.min(1.0)).abs() <= 1e-9 * greater.max(1e-300) + 1e-15,
            "{t:?}: {got} vs {greater}"
        );
    }
}
