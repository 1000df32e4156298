//! Ranking, redundancy pruning and Shapley attribution of drifting subgroups.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use hashbrown::HashMap;
use serde::{Deserialize, Serialize};

use crate::catalog::{ItemId, OutcomeRecord};
use crate::detector::{beta_posterior, DriftReport, SubgroupDrift};
use crate::error::{Error, Result};
use crate::mining::SubgroupCatalog;
use crate::sgmetrics::performance;

/// Largest itemset handled by exact Shapley enumeration.
pub const MAX_SHAPLEY_LEN: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedEntry {
    pub subgroup: usize,
    pub items: Vec<ItemId>,
    pub support: f64,
    pub t_value: f64,
    pub delta_h: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RankedReport {
    pub entries: Vec<RankedEntry>,
}

impl RankedReport {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// `t` descending, then `|delta_h|` descending (undefined last), then items.
fn rank_order(a: &RankedEntry, b: &RankedEntry) -> Ordering {
    b.t_value
        .partial_cmp(&a.t_value)
        .unwrap_or(Ordering::Equal)
        .then_with(|| {
            let da = a.delta_h.map(f64::abs).unwrap_or(f64::NEG_INFINITY);
            let db = b.delta_h.map(f64::abs).unwrap_or(f64::NEG_INFINITY);
            db.partial_cmp(&da).unwrap_or(Ordering::Equal)
        })
        .then_with(|| a.items.cmp(&b.items))
}

/// The `top_k` subgroups of a report in rank order.
pub fn rank(report: &DriftReport, catalog: &SubgroupCatalog, top_k: usize) -> RankedReport {
    let mut entries: Vec<RankedEntry> = report
        .records
        .iter()
        .filter_map(|r| {
            let s = catalog.get(r.subgroup)?;
            Some(RankedEntry {
                subgroup: r.subgroup,
                items: s.items.clone(),
                support: s.support,
                t_value: r.t_value,
                delta_h: r.delta_h,
            })
        })
        .collect();
    entries.sort_by(rank_order);
    entries.truncate(top_k);
    RankedReport { entries }
}

/// Drops an itemset when one of its surviving strict, non-empty subsets has
/// a statistic within `t_threshold` of its own. Itemsets are visited from
/// shortest to longest so every pruned entry is covered by a survivor.
pub fn redundancy_prune(ranked: &RankedReport, t_threshold: f64) -> RankedReport {
    let mut order: Vec<&RankedEntry> = ranked.entries.iter().collect();
    order.sort_by(|a, b| {
        a.items
            .len()
            .cmp(&b.items.len())
            .then_with(|| a.items.cmp(&b.items))
    });
    let mut survivors: HashMap<&[ItemId], f64> = HashMap::with_capacity(order.len());
    let mut kept: Vec<RankedEntry> = Vec::new();
    let mut subset = Vec::with_capacity(MAX_SHAPLEY_LEN);
    for entry in order {
        let n = entry.items.len();
        let mut redundant = false;
        if n > 1 && t_threshold > 0.0 {
            let full = (1u64 << n) - 1;
            for mask in 1..full {
                subset.clear();
                subset.extend(
                    (0..n)
                        .filter(|k| mask >> k & 1 == 1)
                        .map(|k| entry.items[k]),
                );
                if let Some(&t) = survivors.get(subset.as_slice()) {
                    if libm::fabs(t - entry.t_value) < t_threshold {
                        redundant = true;
                        break;
                    }
                }
            }
        }
        if !redundant {
            survivors.insert(entry.items.as_slice(), entry.t_value);
            kept.push(entry.clone());
        }
    }
    kept.sort_by(rank_order);
    RankedReport { entries: kept }
}

/// Per-item contribution, ascending by item id.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ItemAttribution {
    pub contributions: Vec<(ItemId, f64)>,
}

impl ItemAttribution {
    pub fn get(&self, item: ItemId) -> Option<f64> {
        self.contributions
            .iter()
            .find(|(i, _)| *i == item)
            .map(|(_, v)| *v)
    }

    pub fn total(&self) -> f64 {
        self.contributions.iter().map(|(_, v)| v).sum()
    }

    /// Contributions ordered by magnitude, largest first.
    pub fn by_magnitude(&self) -> Vec<(ItemId, f64)> {
        let mut v = self.contributions.clone();
        v.sort_by(|a, b| {
            libm::fabs(b.1)
                .partial_cmp(&libm::fabs(a.1))
                .unwrap_or(Ordering::Equal)
                .then(a.0.cmp(&b.0))
        });
        v
    }
}

/// Exact Shapley values of the items of `items` under the coalition value
/// `value` (called once per subset, including the empty one).
pub fn shapley_local<F>(items: &[ItemId], mut value: F) -> Result<ItemAttribution>
where
    F: FnMut(&[ItemId]) -> Result<f64>,
{
    let n = items.len();
    if n > MAX_SHAPLEY_LEN {
        return Err(Error::ItemsetTooLong(n));
    }
    let mut values = vec![0.0; 1 << n];
    let mut subset = Vec::with_capacity(n);
    for (mask, v) in values.iter_mut().enumerate() {
        subset.clear();
        subset.extend((0..n).filter(|k| mask >> k & 1 == 1).map(|k| items[k]));
        *v = value(&subset)?;
    }
    // weight(k) = k! (n - k - 1)! / n!
    let mut factorial = vec![1.0f64; n + 1];
    for k in 1..=n {
        factorial[k] = factorial[k - 1] * k as f64;
    }
    let weight: Vec<f64> = (0..n)
        .map(|k| factorial[k] * factorial[n - k - 1] / factorial[n])
        .collect();
    let contributions = (0..n)
        .map(|i| {
            let bit = 1usize << i;
            let phi: f64 = (0..values.len())
                .filter(|m| m & bit == 0)
                .map(|m| weight[m.count_ones() as usize] * (values[m | bit] - values[m]))
                .sum();
            (items[i], phi)
        })
        .collect();
    Ok(ItemAttribution { contributions })
}

/// Signed drift of a report record: `delta_h`, or the difference of the
/// posterior means when either window has no outcome.
pub fn drift_value(record: &SubgroupDrift) -> f64 {
    record.delta_h.unwrap_or(record.mu_ref - record.mu_cur)
}

/// Coalition values read from a report.
pub struct ReportValues<'a> {
    catalog: &'a SubgroupCatalog,
    by_subgroup: HashMap<usize, &'a SubgroupDrift>,
}

impl<'a> ReportValues<'a> {
    pub fn new(report: &'a DriftReport, catalog: &'a SubgroupCatalog) -> Self {
        ReportValues {
            catalog,
            by_subgroup: report.records.iter().map(|r| (r.subgroup, r)).collect(),
        }
    }

    pub fn get(&self, items: &[ItemId]) -> Option<f64> {
        let j = self.catalog.find(items)?;
        self.by_subgroup.get(&j).map(|r| drift_value(r))
    }

    pub fn value(&self, items: &[ItemId]) -> Result<f64> {
        self.get(items).ok_or_else(|| {
            Error::InvalidParameter(format!("itemset {items:?} has no drift record"))
        })
    }
}

/// Signed drift of an arbitrary itemset computed by scanning the two
/// windows' records.
pub fn itemset_drift(
    reference: &[OutcomeRecord],
    current: &[OutcomeRecord],
    items: &[ItemId],
) -> f64 {
    let counts = |records: &[OutcomeRecord]| {
        records
            .iter()
            .filter(|r| items.iter().all(|i| r.items.binary_search(i).is_ok()))
            .fold((0u64, 0u64), |(a, b), r| {
                (a + r.alpha as u64, b + r.beta as u64)
            })
    };
    let (ra, rb) = counts(reference);
    let (ca, cb) = counts(current);
    match (performance(ra, rb), performance(ca, cb)) {
        (Some(h_ref), Some(h_cur)) => h_ref - h_cur,
        _ => beta_posterior(ra, rb).mu - beta_posterior(ca, cb).mu,
    }
}

/// Coalition values from the report when the itemset is monitored and from
/// an on-demand scan of the window records otherwise.
pub struct CachedValues<'a> {
    report: ReportValues<'a>,
    reference: &'a [OutcomeRecord],
    current: &'a [OutcomeRecord],
}

impl<'a> CachedValues<'a> {
    pub fn new(
        report: ReportValues<'a>,
        reference: &'a [OutcomeRecord],
        current: &'a [OutcomeRecord],
    ) -> Self {
        CachedValues {
            report,
            reference,
            current,
        }
    }

    pub fn value(&self, items: &[ItemId]) -> f64 {
        self.report
            .get(items)
            .unwrap_or_else(|| itemset_drift(self.reference, self.current, items))
    }
}

/// Mean local Shapley value of each item over the report's subgroups that
/// contain it. Items in no considered subgroup are absent.
pub fn shapley_global(report: &DriftReport, catalog: &SubgroupCatalog) -> Result<ItemAttribution> {
    let values = ReportValues::new(report, catalog);
    let mut sums: BTreeMap<ItemId, (f64, usize)> = BTreeMap::new();
    for record in &report.records {
        let Some(s) = catalog.get(record.subgroup) else {
            continue;
        };
        if s.is_global() || s.len() > MAX_SHAPLEY_LEN {
            continue;
        }
        let local = shapley_local(&s.items, |t| values.value(t))?;
        for (item, phi) in local.contributions {
            let e = sums.entry(item).or_insert((0.0, 0));
            e.0 += phi;
            e.1 += 1;
        }
    }
    Ok(ItemAttribution {
        contributions: sums
            .into_iter()
            .map(|(i, (s, n))| (i, s / n as f64))
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn entry(items: &[u32], t: f64, d: Option<f64>) -> RankedEntry {
        RankedEntry {
            subgroup: 0,
            items: items.to_vec(),
            support: 0.1,
            t_value: t,
            delta_h: d,
        }
    }

    #[test]
    fn rank_order_and_tie_breaks() {
        let mut v = [
            entry(&[2], 1.0, Some(0.1)),
            entry(&[1], 1.0, Some(0.1)),
            entry(&[0], 1.0, Some(0.3)),
            entry(&[3], 2.0, None),
        ];
        v.sort_by(rank_order);
        let order: Vec<u32> = v.iter().map(|e| e.items[0]).collect();
        assert_eq!(order, vec![3, 0, 1, 2]);
    }

    #[test]
    fn pruning_threshold_zero_is_identity() {
        let r = RankedReport {
            entries: vec![entry(&[0], 10.0, None), entry(&[0, 1], 10.0, None)],
        };
        assert_eq!(redundancy_prune(&r, 0.0).entries.len(), 2);
    }

    #[test]
    fn pruning_keeps_distinct_children() {
        let r = RankedReport {
            entries: vec![
                entry(&[0], 10.0, None),
                entry(&[0, 1], 20.0, None),
                entry(&[0, 2], 12.0, None),
            ],
        };
        let p = redundancy_prune(&r, 5.0);
        let kept: Vec<Vec<u32>> = p.entries.iter().map(|e| e.items.clone()).collect();
        assert_eq!(kept, vec![vec![0, 1], vec![0]]);
    }

    #[test]
    fn pruning_chain_needs_surviving_ancestor() {
        // {0,1} is pruned by {0}; {0,1,2} is within 5 of {0,1} only, so it stays.
        let r = RankedReport {
            entries: vec![
                entry(&[0], 10.0, None),
                entry(&[0, 1], 14.0, None),
                entry(&[0, 1, 2], 18.0, None),
            ],
        };
        let kept: Vec<Vec<u32>> = redundancy_prune(&r, 5.0)
            .entries
            .iter()
            .map(|e| e.items.clone())
            .collect();
        assert_eq!(kept, vec![vec![0, 1, 2], vec![0]]);
    }

    #[test]
    fn single_player_gets_full_difference() {
        let a = shapley_local(&[4], |t| Ok(if t.is_empty() { 0.1 } else { 0.5 })).unwrap();
        assert!((a.get(4).unwrap() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn symmetric_pair_splits_evenly() {
        let v = |t: &[u32]| -> Result<f64> {
            Ok(match t.len() {
                0 => 0.0,
                1 => -0.2,
                _ => -0.6,
            })
        };
        let a = shapley_local(&[0, 1], v).unwrap();
        assert!((a.get(0).unwrap() + 0.3).abs() < 1e-15);
        assert!((a.get(1).unwrap() + 0.3).abs() < 1e-15);
    }

    #[test]
    fn null_player_is_zero() {
        // item 9 never changes the value
        let a = shapley_local(&[1, 9], |t| Ok(if t.contains(&1) { 0.7 } else { 0.0 })).unwrap();
        assert_eq!(a.get(9).unwrap(), 0.0);
        assert!((a.get(1).unwrap() - 0.7).abs() < 1e-15);
    }

    #[test]
    fn too_long_itemset_is_rejected() {
        let items: Vec<u32> = (0..13).collect();
        assert_eq!(
            shapley_local(&items, |_| Ok(0.0)),
            Err(Error::ItemsetTooLong(13))
        );
    }

    #[test]
    fn itemset_drift_scans_windows() {
        let r = |items: &[u32], a: bool| OutcomeRecord {
            items: items.to_vec(),
            alpha: a,
            beta: !a,
        };
        let reference = vec![r(&[0, 1], true), r(&[0], true)];
        let current = vec![r(&[0, 1], false), r(&[0], true)];
        assert!((itemset_drift(&reference, &current, &[0]) - 0.5).abs() < 1e-15);
        assert!((itemset_drift(&reference, &current, &[0, 1]) - 1.0).abs() < 1e-15);
        // no members anywhere: prior means cancel
        assert_eq!(itemset_drift(&reference, &current, &[7]), 0.0);
    }
}
