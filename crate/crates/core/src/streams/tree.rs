//! CART classification tree with Gini impurity and axis-aligned splits.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        class: u32,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Instances with `x[feature] <= threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    pub nodes: Vec<Node>,
    pub n_features: usize,
    pub n_classes: u32,
    pub max_depth: usize,
}

impl TreeModel {
    pub fn predict(&self, x: &[f64]) -> u32 {
        let mut k = 0;
        loop {
            match self.nodes[k] {
                Node::Leaf { class } => return class,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    k = if x[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn predict_all(&self, rows: &[Vec<f64>]) -> Vec<u32> {
        rows.iter().map(|r| self.predict(r)).collect()
    }

    /// A single leaf, as produced from single-class training data.
    pub fn is_constant(&self) -> bool {
        self.nodes.len() == 1
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], k: usize) -> usize {
            match nodes[k] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

fn gini(counts: &[u64], n: u64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts
        .iter()
        .map(|&c| (c as f64 / n) * (c as f64 / n))
        .sum::<f64>()
}

fn majority(counts: &[u64]) -> u32 {
    let mut best = 0;
    for (k, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = k;
        }
    }
    best as u32
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [u32],
    n_classes: usize,
    max_depth: usize,
    nodes: Vec<Node>,
}

impl Builder<'_> {
    fn counts(&self, idx: &[usize]) -> Vec<u64> {
        let mut c = vec![0u64; self.n_classes];
        for &i in idx {
            c[self.y[i] as usize] += 1;
        }
        c
    }

    /// Best `(feature, threshold)` by weighted child impurity; ties keep the
    /// lowest feature, then the lowest threshold.
    fn best_split(&self, idx: &[usize], total: &[u64]) -> Option<(usize, f64)> {
        let n = idx.len() as u64;
        let mut best: Option<(f64, usize, f64)> = None;
        let mut order = idx.to_vec();
        let mut left = vec![0u64; self.n_classes];
        for f in 0..self.x.first().map_or(0, |r| r.len()) {
            order.sort_by(|&a, &b| {
                self.x[a][f]
                    .partial_cmp(&self.x[b][f])
                    .unwrap_or(Ordering::Equal)
            });
            left.iter_mut().for_each(|c| *c = 0);
            for k in 0..order.len() - 1 {
                left[self.y[order[k]] as usize] += 1;
                let (v, next) = (self.x[order[k]][f], self.x[order[k + 1]][f]);
                if v == next {
                    continue;
                }
                let nl = k as u64 + 1;
                let right: Vec<u64> = total.iter().zip(&left).map(|(t, l)| t - l).collect();
                let score = (nl as f64 * gini(&left, nl) + (n - nl) as f64 * gini(&right, n - nl))
                    / n as f64;
                if best.is_none_or(|(s, _, _)| score < s - 1e-12) {
                    best = Some((score, f, v + (next - v) / 2.0));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }

    fn grow(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let counts = self.counts(&idx);
        let slot = self.nodes.len();
        self.nodes.push(Node::Leaf {
            class: majority(&counts),
        });
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || depth >= self.max_depth || idx.len() < 2 {
            return slot;
        }
        let Some((feature, threshold)) = self.best_split(&idx, &counts) else {
            return slot;
        };
        let (l, r): (Vec<usize>, Vec<usize>) =
            idx.iter().partition(|&&i| self.x[i][feature] <= threshold);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[slot] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        slot
    }
}

/// Fits a tree of depth at most `max_depth`. Impure nodes are split even
/// when no split lowers the impurity, so interactions such as XOR are
/// reachable. Single-class data yields a constant tree.
pub fn fit_tree(x: &[Vec<f64>], y: &[u32], max_depth: usize) -> Result<TreeModel> {
    if x.is_empty() {
        return Err(Error::EmptyInput);
    }
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    let n_features = x[0].len();
    if let Some(row) = x.iter().position(|r| r.len() != n_features) {
        return Err(Error::InvalidParameter(alloc::format!(
            "row {row}: expected {n_features} features"
        )));
    }
    if let Some(row) = x.iter().position(|r| r.iter().any(|v| v.is_nan())) {
        return Err(Error::InvalidParameter(alloc::format!(
            "row {row}: NaN feature"
        )));
    }
    let n_classes = y.iter().copied().max().unwrap_or(0) + 1;
    let mut b = Builder {
        x,
        y,
        n_classes: n_classes as usize,
        max_depth,
        nodes: Vec::new(),
    };
    b.grow((0..x.len()).collect(), 0);
    Ok(TreeModel {
        nodes: b.nodes,
        n_features,
        n_classes,
        max_depth,
    })
}

pub fn accuracy(model: &TreeModel, x: &[Vec<f64>], y: &[u32]) -> f64 {
    let hits = x
        .iter()
        .zip(y)
        .filter(|(r, &t)| model.predict(r) == t)
        .count();
    hits as f64 / y.len().max(1) as f64
}
