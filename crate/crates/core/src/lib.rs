//! Subgroup-level performance drift detection.
//!
//! Frequent itemsets mined from a reference dataset define the monitored
//! subgroups. Each batch of labelled predictions is encoded as a sparse
//! point matrix, subgroup membership is obtained as `floor(P * G^T)` and the
//! per-subgroup outcome counts feed a Beta-posterior Welch statistic that
//! flags drifting subgroups.
//!
//! The crate is `no_std` (with `alloc`); file formats, experiment runners and
//! the command line live in the `driftscope` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod baselines;
pub mod catalog;
pub mod detector;
pub mod error;
pub mod evaluation;
pub mod explain;
pub mod mining;
pub mod seed;
pub mod sgmetrics;
pub mod sparse;
pub mod streams;

pub use catalog::{
    BinningConfig, BinningRule, Item, ItemCatalog, MetricSpec, OutcomeRecord, RawValue,
};
pub use detector::{DriftReport, MonitorState, SubgroupDrift, WindowConfig};
pub use error::{Error, Result};
pub use mining::{MiningConfig, Subgroup, SubgroupCatalog};
pub use sgmetrics::{EncodedBatch, SubgroupStats};
