//! Scoring of detection experiments and subgroup rankings.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::CsrPattern;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Positive,
    Negative,
}

/// One stream run. `batch_flags` are the detector's per-batch drift
/// decisions; `batch_scores` optionally keep the per-batch maximum statistic
/// so the decision threshold can be swept afterwards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Experiment {
    pub kind: ExperimentKind,
    pub batch_flags: Vec<bool>,
    #[serde(default)]
    pub batch_scores: Vec<f64>,
}

impl Experiment {
    pub fn from_flags(kind: ExperimentKind, batch_flags: Vec<bool>) -> Self {
        Experiment {
            kind,
            batch_flags,
            batch_scores: Vec::new(),
        }
    }

    /// Flags derived from scores with the rule `score > tau`.
    pub fn from_scores(kind: ExperimentKind, batch_scores: Vec<f64>, tau: f64) -> Self {
        let batch_flags = batch_scores.iter().map(|&s| s > tau).collect();
        Experiment {
            kind,
            batch_flags,
            batch_scores,
        }
    }

    /// Drift reported in at least one batch.
    pub fn outcome(&self) -> bool {
        self.batch_flags.iter().any(|&f| f)
    }

    pub fn outcome_at(&self, tau: f64) -> bool {
        self.batch_scores.iter().any(|&s| s > tau)
    }

    /// First flagged batch (0-based position in `batch_flags`).
    pub fn first_detection(&self) -> Option<usize> {
        self.batch_flags.iter().position(|&f| f)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl Confusion {
    pub fn from_outcomes<I: IntoIterator<Item = (ExperimentKind, bool)>>(outcomes: I) -> Self {
        let mut c = Confusion::default();
        for (kind, detected) in outcomes {
            match (kind, detected) {
                (ExperimentKind::Positive, true) => c.tp += 1,
                (ExperimentKind::Positive, false) => c.fn_ += 1,
                (ExperimentKind::Negative, true) => c.fp += 1,
                (ExperimentKind::Negative, false) => c.tn += 1,
            }
        }
        c
    }

    pub fn positives(&self) -> usize {
        self.tp + self.fn_
    }

    pub fn negatives(&self) -> usize {
        self.tn + self.fp
    }

    pub fn tpr(&self) -> Option<f64> {
        ratio(self.tp, self.positives())
    }

    pub fn tnr(&self) -> Option<f64> {
        ratio(self.tn, self.negatives())
    }
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Rates that cannot be defined for the given suite are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionScores {
    pub confusion: Confusion,
    pub accuracy: Option<f64>,
    pub f1: Option<f64>,
    pub fpr: Option<f64>,
    pub fnr: Option<f64>,
}

impl DetectionScores {
    pub fn from_confusion(c: Confusion) -> Self {
        DetectionScores {
            confusion: c,
            accuracy: ratio(c.tp + c.tn, c.positives() + c.negatives()),
            f1: ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn_),
            fpr: ratio(c.fp, c.negatives()),
            fnr: ratio(c.fn_, c.positives()),
        }
    }
}

pub fn detection_scores(experiments: &[Experiment]) -> DetectionScores {
    DetectionScores::from_confusion(Confusion::from_outcomes(
        experiments.iter().map(|e| (e.kind, e.outcome())),
    ))
}

/// Scores at threshold `tau` using the stored per-batch statistics.
pub fn detection_scores_at(experiments: &[Experiment], tau: f64) -> DetectionScores {
    DetectionScores::from_confusion(Confusion::from_outcomes(
        experiments.iter().map(|e| (e.kind, e.outcome_at(tau))),
    ))
}

fn dcg(relevance: &[f64], k: usize) -> f64 {
    relevance
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, &r)| r / libm::log2(i as f64 + 2.0))
        .sum()
}

/// nDCG@k of relevances listed in ranked order (linear gain, discount
/// `1 / log2(rank + 1)`). A ranking without any relevant entry scores 1.
pub fn ndcg_at_k(ranked_relevance: &[f64], k: usize) -> f64 {
    let mut ideal = ranked_relevance.to_vec();
    ideal.sort_by(|a, b| b.partial_cmp(a).unwrap_or(Ordering::Equal));
    let idcg = dcg(&ideal, k);
    if idcg <= 0.0 {
        return 1.0;
    }
    dcg(ranked_relevance, k) / idcg
}

/// Orders `relevance` by descending `scores` (ties by position) and returns
/// the nDCG@k of that ranking.
pub fn ndcg_for_scores(relevance: &[f64], scores: &[f64], k: usize) -> Result<f64> {
    if relevance.len() != scores.len() {
        return Err(Error::DimensionMismatch {
            expected: relevance.len(),
            found: scores.len(),
        });
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    let ranked: Vec<f64> = order.iter().map(|&i| relevance[i]).collect();
    Ok(ndcg_at_k(&ranked, k))
}

/// nDCG@k of `n_perm` uniformly random orderings of `relevance`.
pub fn random_ndcg<R: Rng + ?Sized>(
    relevance: &[f64],
    k: usize,
    n_perm: usize,
    rng: &mut R,
) -> Vec<f64> {
    let mut ranked = relevance.to_vec();
    (0..n_perm)
        .map(|_| {
            ranked.shuffle(rng);
            ndcg_at_k(&ranked, k)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlations {
    pub pearson: Option<f64>,
    pub spearman: Option<f64>,
}

pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some((sxy / libm::sqrt(sxx * syy)).clamp(-1.0, 1.0))
}

/// 1-based ranks, tied values sharing their average rank.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].partial_cmp(&x[b]).unwrap_or(Ordering::Equal));
    let mut ranks = vec![0.0; x.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && x[order[end]] == x[order[start]] {
            end += 1;
        }
        let avg = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = avg;
        }
        start = end;
    }
    ranks
}

pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() {
        return None;
    }
    pearson(&average_ranks(x), &average_ranks(y))
}

pub fn correlations(relevance: &[f64], scores: &[f64]) -> Result<Correlations> {
    if relevance.len() != scores.len() {
        return Err(Error::DimensionMismatch {
            expected: relevance.len(),
            found: scores.len(),
        });
    }
    Ok(Correlations {
        pearson: pearson(relevance, scores),
        spearman: spearman(relevance, scores),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YoudenPoint {
    pub tau: f64,
    pub j: f64,
    pub tpr: f64,
    pub tnr: f64,
}

/// Every grid point with its J statistic, in grid order.
pub fn youden_curve(experiments: &[Experiment], tau_grid: &[f64]) -> Vec<YoudenPoint> {
    tau_grid
        .iter()
        .filter_map(|&tau| {
            let c =
                Confusion::from_outcomes(experiments.iter().map(|e| (e.kind, e.outcome_at(tau))));
            let (tpr, tnr) = (c.tpr()?, c.tnr()?);
            Some(YoudenPoint {
                tau,
                j: tpr + tnr - 1.0,
                tpr,
                tnr,
            })
        })
        .collect()
}

/// The threshold maximizing `J = TPR + TNR - 1`; ties go to the larger
/// threshold (J values within 1e-12 count as tied). `None` when the suite
/// lacks either kind or the grid is empty.
pub fn youden_sweep(experiments: &[Experiment], tau_grid: &[f64]) -> Option<YoudenPoint> {
    youden_curve(experiments, tau_grid)
        .into_iter()
        .reduce(|best, p| {
            let tie = libm::fabs(p.j - best.j) <= 1e-12;
            if (!tie && p.j > best.j) || (tie && p.tau > best.tau) {
                p
            } else {
                best
            }
        })
}

/// Fraction of altered instances inside each subgroup of `membership`;
/// subgroups without members get 0.
pub fn altered_fractions(membership: &CsrPattern, altered: &[bool]) -> Result<Vec<f64>> {
    if altered.len() != membership.n_rows() {
        return Err(Error::DimensionMismatch {
            expected: membership.n_rows(),
            found: altered.len(),
        });
    }
    let mut hit = vec![0u64; membership.n_cols()];
    let mut total = vec![0u64; membership.n_cols()];
    for (row, &a) in membership.rows().zip(altered) {
        for &j in row {
            total[j as usize] += 1;
            hit[j as usize] += a as u64;
        }
    }
    Ok(hit
        .iter()
        .zip(&total)
        .map(|(&h, &t)| if t == 0 { 0.0 } else { h as f64 / t as f64 })
        .collect())
}

/// Mean and sample standard deviation (0 for fewer than two values).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, libm::sqrt(var))
}

/// Median of a non-empty slice (mean of the middle pair for even length).
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ExperimentKind::{Negative, Positive};

    fn exp(kind: ExperimentKind, flagged: bool) -> Experiment {
        Experiment::from_flags(kind, vec![false, flagged])
    }

    #[test]
    fn perfect_detection() {
        let s = detection_scores(&[
            exp(Positive, true),
            exp(Positive, true),
            exp(Negative, false),
        ]);
        assert_eq!(
            (s.accuracy, s.f1, s.fpr, s.fnr),
            (Some(1.0), Some(1.0), Some(0.0), Some(0.0))
        );
    }

    #[test]
    fn silent_detector_on_balanced_suite() {
        let s = detection_scores(&[exp(Positive, false), exp(Negative, false)]);
        assert_eq!(
            (s.accuracy, s.f1, s.fpr, s.fnr),
            (Some(0.5), Some(0.0), Some(0.0), Some(1.0))
        );
    }

    #[test]
    fn missing_kind_leaves_rates_absent() {
        let s = detection_scores(&[exp(Positive, true)]);
        assert_eq!(s.fpr, None);
        assert_eq!(s.fnr, Some(0.0));
        let s = detection_scores(&[exp(Negative, false)]);
        assert_eq!((s.fnr, s.f1), (None, None));
    }

    #[test]
    fn ndcg_fixtures() {
        assert_eq!(ndcg_at_k(&[1.0, 0.5, 0.25], 3), 1.0);
        let reversed = ndcg_at_k(&[0.25, 0.5, 1.0], 3);
        assert!(
            (reversed - 0.739_667_376_800_759).abs() < 1e-12,
            "{reversed}"
        );
        assert_eq!(ndcg_at_k(&[0.0, 0.0], 2), 1.0);
        assert_eq!(ndcg_at_k(&[1.0], 10), 1.0);
    }

    #[test]
    fn ndcg_from_scores_orders_descending() {
        let v = ndcg_for_scores(&[0.25, 0.5, 1.0], &[1.0, 2.0, 3.0], 3).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
    }

    #[test]
    fn correlation_signs() {
        let r = [0.1, 0.4, 0.2, 0.9];
        let neg: Vec<f64> = r.iter().map(|v| -v).collect();
        let c = correlations(&r, &r).unwrap();
        assert!(
            (c.pearson.unwrap() - 1.0).abs() < 1e-12 && (c.spearman.unwrap() - 1.0).abs() < 1e-12
        );
        let c = correlations(&r, &neg).unwrap();
        assert!(
            (c.pearson.unwrap() + 1.0).abs() < 1e-12 && (c.spearman.unwrap() + 1.0).abs() < 1e-12
        );
        assert_eq!(correlations(&r, &[1.0; 4]).unwrap().pearson, None);
    }

    #[test]
    fn average_ranks_share_ties() {
        assert_eq!(
            average_ranks(&[3.0, 1.0, 3.0, 2.0]),
            vec![3.5, 1.0, 3.5, 2.0]
        );
    }

    #[test]
    fn youden_prefers_larger_tau_on_ties() {
        let e = vec![
            Experiment::from_scores(Positive, vec![1.0, 9.0], 5.0),
            Experiment::from_scores(Negative, vec![1.0, 2.0], 5.0),
        ];
        let best = youden_sweep(&e, &[3.0, 5.0, 7.0, 10.0]).unwrap();
        assert_eq!((best.tau, best.j), (7.0, 1.0));
        let flat = youden_sweep(&e, &[20.0, 30.0]).unwrap();
        assert_eq!(flat.tau, 30.0);
        assert!(youden_sweep(&e[..1], &[1.0]).is_none());
    }

    #[test]
    fn altered_fraction_per_column() {
        let m = CsrPattern::from_rows(2, [&[0u32, 1][..], &[0][..], &[0, 1][..]]).unwrap();
        let f = altered_fractions(&m, &[true, false, false]).unwrap();
        assert_eq!(f, vec![1.0 / 3.0, 0.5]);
    }

    #[test]
    fn mean_std_sample() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0]);
        assert_eq!((m, s), (2.0, 1.0));
        assert_eq!(median(&[3.0, 1.0, 2.0, 10.0]), 2.5);
    }
}
