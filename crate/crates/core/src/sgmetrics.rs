//! Per-subgroup outcome counts through sparse products.
//!
//! A batch becomes a binary point matrix `P` (instances x items). Membership
//! is `M = floor(P * G^T)` with the normalized groups matrix `G`, and the
//! per-subgroup counts are the sparse vector-matrix products `A^T M` and
//! `B^T M` for the outcome indicator vectors `A` and `B`.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::catalog::OutcomeRecord;
use crate::error::{Error, Result};
use crate::mining::SubgroupCatalog;
use crate::sparse::{floor_product, with_leading_ones, CsrPattern};

/// Entries of `P * G^T` at or above `1 - MEMBERSHIP_EPS` count as one.
pub const MEMBERSHIP_EPS: f64 = 1e-9;

/// A batch as point matrix plus outcome indicator vectors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedBatch {
    points: CsrPattern,
    alpha: Vec<bool>,
    beta: Vec<bool>,
    batch_id: u64,
}

impl EncodedBatch {
    pub fn encode<'a, I>(records: I, n_items: usize, batch_id: u64) -> Result<Self>
    where
        I: IntoIterator<Item = &'a OutcomeRecord>,
    {
        let mut points = CsrPattern::empty(n_items);
        let mut alpha = Vec::new();
        let mut beta = Vec::new();
        let mut scratch = Vec::new();
        for (row, r) in records.into_iter().enumerate() {
            if r.alpha && r.beta {
                return Err(Error::InvalidOutcome { row });
            }
            let items = if r.items.windows(2).all(|w| w[0] < w[1]) {
                &r.items[..]
            } else {
                scratch.clear();
                scratch.extend_from_slice(&r.items);
                scratch.sort_unstable();
                scratch.dedup();
                &scratch[..]
            };
            points.push_row(items)?;
            alpha.push(r.alpha);
            beta.push(r.beta);
        }
        Ok(EncodedBatch {
            points,
            alpha,
            beta,
            batch_id,
        })
    }

    /// Builds from an existing point matrix and indicator vectors.
    pub fn from_parts(
        points: CsrPattern,
        alpha: Vec<bool>,
        beta: Vec<bool>,
        batch_id: u64,
    ) -> Result<Self> {
        if alpha.len() != points.n_rows() || beta.len() != points.n_rows() {
            return Err(Error::DimensionMismatch {
                expected: points.n_rows(),
                found: alpha.len().min(beta.len()),
            });
        }
        if let Some(row) = alpha.iter().zip(&beta).position(|(a, b)| *a && *b) {
            return Err(Error::InvalidOutcome { row });
        }
        Ok(EncodedBatch {
            points,
            alpha,
            beta,
            batch_id,
        })
    }

    pub fn points(&self) -> &CsrPattern {
        &self.points
    }

    pub fn alpha(&self) -> &[bool] {
        &self.alpha
    }

    pub fn beta(&self) -> &[bool] {
        &self.beta
    }

    pub fn batch_id(&self) -> u64 {
        self.batch_id
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    /// Rows `start..end` as a batch with the same id.
    pub fn slice(&self, start: usize, end: usize) -> EncodedBatch {
        EncodedBatch {
            points: self.points.slice_rows(start, end),
            alpha: self.alpha[start..end].to_vec(),
            beta: self.beta[start..end].to_vec(),
            batch_id: self.batch_id,
        }
    }
}

/// Membership matrix (instances x subgroups): entry `(i, j)` is set iff
/// subgroup `j` is contained in instance `i`. Column 0, the global
/// subgroup, is set in every row.
pub fn membership(batch: &EncodedBatch, catalog: &SubgroupCatalog) -> Result<CsrPattern> {
    if batch.points.n_cols() != catalog.n_items() {
        return Err(Error::DimensionMismatch {
            expected: catalog.n_items(),
            found: batch.points.n_cols(),
        });
    }
    let m = floor_product(
        &batch.points,
        catalog.groups_matrix_t(),
        MEMBERSHIP_EPS,
        1,
        catalog.len(),
    )?;
    Ok(with_leading_ones(m, 1))
}

/// Outcome counts per subgroup over some window of instances.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubgroupStats {
    pub alpha: Vec<u64>,
    pub beta: Vec<u64>,
    pub n_instances: u64,
}

impl SubgroupStats {
    pub fn zeros(n_subgroups: usize) -> Self {
        SubgroupStats {
            alpha: vec![0; n_subgroups],
            beta: vec![0; n_subgroups],
            n_instances: 0,
        }
    }

    pub fn n_subgroups(&self) -> usize {
        self.alpha.len()
    }

    pub fn counts(&self, j: usize) -> (u64, u64) {
        (self.alpha[j], self.beta[j])
    }

    /// `h = alpha / (alpha + beta)`, `None` when the subgroup has no outcome.
    pub fn performance(&self, j: usize) -> Option<f64> {
        performance(self.alpha[j], self.beta[j])
    }

    pub fn add(&mut self, other: &SubgroupStats) -> Result<()> {
        if other.n_subgroups() != self.n_subgroups() {
            return Err(Error::DimensionMismatch {
                expected: self.n_subgroups(),
                found: other.n_subgroups(),
            });
        }
        for (a, b) in self.alpha.iter_mut().zip(&other.alpha) {
            *a += b;
        }
        for (a, b) in self.beta.iter_mut().zip(&other.beta) {
            *a += b;
        }
        self.n_instances += other.n_instances;
        Ok(())
    }

    /// Elementwise sum. The empty list yields empty stats (zero subgroups).
    pub fn merge<'a, I>(stats: I) -> Result<SubgroupStats>
    where
        I: IntoIterator<Item = &'a SubgroupStats>,
    {
        let mut iter = stats.into_iter();
        let Some(first) = iter.next() else {
            return Ok(SubgroupStats::zeros(0));
        };
        let mut total = first.clone();
        for s in iter {
            total.add(s)?;
        }
        Ok(total)
    }
}

/// `alpha / (alpha + beta)` or `None` without outcomes.
pub fn performance(alpha: u64, beta: u64) -> Option<f64> {
    let n = alpha + beta;
    (n > 0).then(|| alpha as f64 / n as f64)
}

/// `alpha_j = sum_i A_i M_ij` and `beta_j = sum_i B_i M_ij`.
pub fn aggregate(batch: &EncodedBatch, membership: &CsrPattern) -> Result<SubgroupStats> {
    if membership.n_rows() != batch.len() {
        return Err(Error::DimensionMismatch {
            expected: batch.len(),
            found: membership.n_rows(),
        });
    }
    let mut stats = SubgroupStats::zeros(membership.n_cols());
    for (i, row) in membership.rows().enumerate() {
        if batch.alpha[i] {
            for &j in row {
                stats.alpha[j as usize] += 1;
            }
        } else if batch.beta[i] {
            for &j in row {
                stats.beta[j as usize] += 1;
            }
        }
    }
    stats.n_instances = batch.len() as u64;
    Ok(stats)
}

/// Membership and aggregation in one pass; the membership matrix is dropped.
pub fn batch_stats(batch: &EncodedBatch, catalog: &SubgroupCatalog) -> Result<SubgroupStats> {
    let m = membership(batch, catalog)?;
    aggregate(batch, &m)
}
