//! Subgroup-targeted label-flip injection.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::catalog::ItemId;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RampShape {
    #[default]
    Linear,
    Sigmoid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftSchedule {
    pub normal_batches: usize,
    pub transition_batches: usize,
    pub drift_batches: usize,
    pub p_max: f64,
    pub target: Vec<ItemId>,
    #[serde(default)]
    pub ramp: RampShape,
}

impl DriftSchedule {
    pub fn new(p_max: f64, target: Vec<ItemId>) -> Self {
        DriftSchedule {
            normal_batches: 10,
            transition_batches: 10,
            drift_batches: 10,
            p_max,
            target,
            ramp: RampShape::Linear,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p_max) {
            return Err(Error::InvalidParameter(format!(
                "p_max must lie in [0, 1], got {}",
                self.p_max
            )));
        }
        Ok(())
    }

    pub fn n_batches(&self) -> usize {
        self.normal_batches + self.transition_batches + self.drift_batches
    }

    /// Flip probability for the 0-based batch `b`. Batches past the
    /// schedule stay at `p_max`.
    pub fn flip_probability(&self, b: usize) -> f64 {
        if b < self.normal_batches {
            return 0.0;
        }
        let k = b - self.normal_batches + 1;
        let n = self.transition_batches;
        if k > n {
            return self.p_max;
        }
        let frac = k as f64 / n as f64;
        match self.ramp {
            RampShape::Linear => self.p_max * frac,
            // logistic in the ramp position, rescaled to end exactly at p_max
            RampShape::Sigmoid => {
                let s = |u: f64| 1.0 / (1.0 + libm::exp(-10.0 * (u - 0.5)));
                self.p_max * (s(frac) - s(0.0)) / (s(1.0) - s(0.0))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Injected {
    pub labels: Vec<u32>,
    pub altered: Vec<bool>,
}

fn covers(items: &[ItemId], target: &[ItemId]) -> bool {
    target.iter().all(|t| items.binary_search(t).is_ok())
}

/// Flips binary labels of instances covered by the schedule's target.
/// `items[i]` must be sorted; `batch_sizes` partition the instances in order.
pub fn inject_label_flip<R: Rng + ?Sized>(
    items: &[Vec<ItemId>],
    labels: &[u32],
    batch_sizes: &[usize],
    schedule: &DriftSchedule,
    rng: &mut R,
) -> Result<Injected> {
    schedule.validate()?;
    if items.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: items.len(),
            found: labels.len(),
        });
    }
    let total: usize = batch_sizes.iter().sum();
    if total != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            found: total,
        });
    }
    if let Some(row) = labels.iter().position(|&y| y > 1) {
        return Err(Error::InvalidParameter(format!(
            "row {row}: label flipping needs binary labels"
        )));
    }
    let covered: Vec<bool> = items
        .iter()
        .map(|it| covers(it, &schedule.target))
        .collect();
    if !covered.iter().any(|&c| c) {
        return Err(Error::EmptyCoverage);
    }
    let mut out = Injected {
        labels: labels.to_vec(),
        altered: alloc::vec![false; labels.len()],
    };
    let mut start = 0;
    for (b, &size) in batch_sizes.iter().enumerate() {
        let p = schedule.flip_probability(b);
        let range = start..start + size;
        for ((label, altered), &c) in out.labels[range.clone()]
            .iter_mut()
            .zip(&mut out.altered[range.clone()])
            .zip(&covered[range])
        {
            if c && p > 0.0 && rng.gen_bool(p) {
                *label = 1 - *label;
                *altered = true;
            }
        }
        start += size;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ramp_levels() {
        let s = DriftSchedule::new(0.8, vec![0]);
        assert_eq!(s.flip_probability(4), 0.0);
        assert!((s.flip_probability(14) - 0.4).abs() < 1e-15);
        assert!((s.flip_probability(19) - 0.8).abs() < 1e-15);
        assert_eq!(s.flip_probability(29), 0.8);
        let sig = DriftSchedule {
            ramp: RampShape::Sigmoid,
            ..s
        };
        assert!((sig.flip_probability(19) - 0.8).abs() < 1e-12);
        assert!(sig.flip_probability(12) < sig.flip_probability(13));
    }

    fn setup(n_per_batch: usize) -> (Vec<Vec<u32>>, Vec<u32>, Vec<usize>) {
        let items: Vec<Vec<u32>> = (0..30 * n_per_batch)
            .map(|i| if i % 2 == 0 { vec![0, 1] } else { vec![1] })
            .collect();
        let labels = (0..items.len()).map(|i| (i % 3 == 0) as u32).collect();
        (items, labels, vec![n_per_batch; 30])
    }

    #[test]
    fn flips_only_inside_coverage_and_schedule() {
        let (items, labels, sizes) = setup(100);
        let s = DriftSchedule::new(1.0, vec![0]);
        let out = inject_label_flip(
            &items,
            &labels,
            &sizes,
            &s,
            &mut ChaCha8Rng::seed_from_u64(1),
        )
        .unwrap();
        for (i, &label) in labels.iter().enumerate() {
            let batch = i / 100;
            let covered = i % 2 == 0;
            assert_eq!(out.altered[i], out.labels[i] != label);
            if !covered || batch < 10 {
                assert!(!out.altered[i]);
            }
            if covered && batch >= 20 {
                assert!(out.altered[i]);
            }
        }
    }

    #[test]
    fn transition_flip_fraction_tracks_ramp() {
        // batch 15 (k = 5 of 10) at p_max 0.8 over 10k covered instances
        let n = 20_000;
        let items = vec![vec![0u32]; 30 * n];
        let labels = vec![0u32; 30 * n];
        let sizes = vec![n; 30];
        let s = DriftSchedule::new(0.8, vec![0]);
        let out = inject_label_flip(
            &items,
            &labels,
            &sizes,
            &s,
            &mut ChaCha8Rng::seed_from_u64(2),
        )
        .unwrap();
        let frac = out.altered[14 * n..15 * n].iter().filter(|&&a| a).count() as f64 / n as f64;
        assert!((frac - 0.4).abs() < 0.02, "{frac}");
    }

    #[test]
    fn empty_coverage_and_bad_input() {
        let (items, labels, sizes) = setup(10);
        let s = DriftSchedule::new(0.5, vec![7]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert_eq!(
            inject_label_flip(&items, &labels, &sizes, &s, &mut rng),
            Err(Error::EmptyCoverage)
        );
        let s = DriftSchedule::new(1.5, vec![0]);
        assert!(inject_label_flip(&items, &labels, &sizes, &s, &mut rng).is_err());
        let s = DriftSchedule::new(0.5, vec![0]);
        assert!(inject_label_flip(&items, &labels, &sizes[..3], &s, &mut rng).is_err());
    }
}
