//! Frequent subgroup mining and the normalized groups matrix.
//!
//! Itemsets are mined with vertical tid-set intersection: every frequent
//! itemset keeps a bitset of the transactions containing it and extensions
//! are obtained by AND-ing the bitsets of two siblings that share a prefix.
//! Supports are exact.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use hashbrown::HashMap;
use serde::{Deserialize, Serialize};

use crate::catalog::ItemId;
use crate::error::{Error, Result};
use crate::sparse::{CsrMatrix, CsrPattern};

pub const CATALOG_VERSION: &str = "driftscope-subgroups/1";
pub const DEFAULT_MAX_LEN: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MiningConfig {
    pub min_support: f64,
    pub max_len: usize,
}

impl MiningConfig {
    pub fn new(min_support: f64, max_len: usize) -> Result<Self> {
        let config = MiningConfig {
            min_support,
            max_len,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.min_support > 0.0 && self.min_support <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "minimum support must be in (0, 1], got {}",
                self.min_support
            )));
        }
        if self.max_len == 0 {
            return Err(Error::InvalidParameter("max_len must be at least 1".into()));
        }
        Ok(())
    }

    /// Smallest transaction count whose support reaches `min_support`.
    pub fn min_count(&self, n_transactions: usize) -> u64 {
        let n = n_transactions as f64;
        let mut c = libm::ceil(self.min_support * n) as u64;
        while c > 0 && (c - 1) as f64 / n >= self.min_support {
            c -= 1;
        }
        while (c as f64) / n < self.min_support {
            c += 1;
        }
        c
    }
}

impl Default for MiningConfig {
    fn default() -> Self {
        MiningConfig {
            min_support: 0.01,
            max_len: DEFAULT_MAX_LEN,
        }
    }
}

/// A monitored subgroup: a conjunction of items.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subgroup {
    pub items: Vec<ItemId>,
    pub support: f64,
    /// Number of reference transactions covered.
    pub count: u64,
    #[serde(skip)]
    pub index: usize,
}

impl Subgroup {
    pub fn is_global(&self) -> bool {
        self.items.is_empty()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

/// The mined subgroups plus their row-normalized groups matrix.
///
/// Subgroup 0 is always the global subgroup (empty itemset). It has no row
/// in the groups matrix: row `r` of the matrix describes subgroup `r + 1`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "CatalogFile", into = "CatalogFile")]
pub struct SubgroupCatalog {
    config: MiningConfig,
    n_items: usize,
    n_transactions: usize,
    subgroups: Vec<Subgroup>,
    groups: CsrMatrix,
    groups_t: CsrMatrix,
    index: HashMap<Vec<ItemId>, usize>,
}

#[derive(Serialize, Deserialize)]
struct CatalogFile {
    version: String,
    config: MiningConfig,
    n_items: usize,
    n_transactions: usize,
    subgroups: Vec<Subgroup>,
}

impl From<SubgroupCatalog> for CatalogFile {
    fn from(c: SubgroupCatalog) -> Self {
        CatalogFile {
            version: CATALOG_VERSION.into(),
            config: c.config,
            n_items: c.n_items,
            n_transactions: c.n_transactions,
            subgroups: c.subgroups,
        }
    }
}

impl TryFrom<CatalogFile> for SubgroupCatalog {
    type Error = Error;

    fn try_from(f: CatalogFile) -> Result<Self> {
        if f.version != CATALOG_VERSION {
            return Err(Error::InvalidParameter(format!(
                "unsupported catalog version `{}`",
                f.version
            )));
        }
        SubgroupCatalog::from_subgroups(f.subgroups, f.n_items, f.n_transactions, f.config)
    }
}

impl PartialEq for SubgroupCatalog {
    fn eq(&self, other: &Self) -> bool {
        self.config == other.config
            && self.n_items == other.n_items
            && self.n_transactions == other.n_transactions
            && self.subgroups == other.subgroups
    }
}

impl SubgroupCatalog {
    /// Assembles a catalog from explicit subgroups. Itemsets are sorted and
    /// deduplicated, the global subgroup is added when absent, and subgroups
    /// are ordered lexicographically by item ids.
    pub fn from_subgroups(
        mut subgroups: Vec<Subgroup>,
        n_items: usize,
        n_transactions: usize,
        config: MiningConfig,
    ) -> Result<Self> {
        for s in subgroups.iter_mut() {
            s.items.sort_unstable();
            s.items.dedup();
            if let Some(&bad) = s.items.iter().find(|&&i| i as usize >= n_items) {
                return Err(Error::ItemOutOfRange {
                    row: s.index,
                    item: bad,
                    n_items,
                });
            }
        }
        subgroups.sort_by(|a, b| a.items.cmp(&b.items));
        subgroups.dedup_by(|a, b| a.items == b.items);
        if subgroups.first().is_none_or(|s| !s.is_global()) {
            subgroups.insert(
                0,
                Subgroup {
                    items: Vec::new(),
                    support: 1.0,
                    count: n_transactions as u64,
                    index: 0,
                },
            );
        }
        let mut index = HashMap::with_capacity(subgroups.len());
        for (k, s) in subgroups.iter_mut().enumerate() {
            s.index = k;
            index.insert(s.items.clone(), k);
        }
        let groups = build_groups_matrix(&subgroups, n_items);
        let groups_t = groups.transpose();
        Ok(SubgroupCatalog {
            config,
            n_items,
            n_transactions,
            subgroups,
            groups,
            groups_t,
            index,
        })
    }

    pub fn config(&self) -> MiningConfig {
        self.config
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn n_transactions(&self) -> usize {
        self.n_transactions
    }

    /// Number of subgroups including the global one.
    pub fn len(&self) -> usize {
        self.subgroups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subgroups.is_empty()
    }

    pub fn subgroups(&self) -> &[Subgroup] {
        &self.subgroups
    }

    pub fn get(&self, index: usize) -> Option<&Subgroup> {
        self.subgroups.get(index)
    }

    /// Index of an itemset given in ascending id order.
    pub fn find(&self, items: &[ItemId]) -> Option<usize> {
        self.index.get(items).copied()
    }

    /// Normalized |G|-1 x |I| groups matrix (non-global subgroups only).
    pub fn groups_matrix(&self) -> &CsrMatrix {
        &self.groups
    }

    /// Transpose of the groups matrix, |I| x (|G|-1).
    pub fn groups_matrix_t(&self) -> &CsrMatrix {
        &self.groups_t
    }

    pub fn max_itemset_len(&self) -> usize {
        self.subgroups.iter().map(Subgroup::len).max().unwrap_or(0)
    }
}

/// One row per non-global subgroup holding `1/|S|` at each of its items.
pub fn build_groups_matrix(subgroups: &[Subgroup], n_items: usize) -> CsrMatrix {
    let mut g = CsrMatrix::empty(n_items);
    let mut values = Vec::new();
    for s in subgroups.iter().filter(|s| !s.is_global()) {
        values.clear();
        values.resize(s.len(), 1.0 / s.len() as f64);
        g.push_row(&s.items, &values)
            .expect("items validated against n_items");
    }
    g
}

struct Bitset {
    words: Vec<u64>,
}

impl Bitset {
    fn zeros(n_bits: usize) -> Self {
        Bitset {
            words: vec![0; n_bits.div_ceil(64)],
        }
    }

    fn set(&mut self, bit: usize) {
        self.words[bit / 64] |= 1 << (bit % 64);
    }

    fn count(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    fn and(&self, other: &Bitset) -> (Bitset, u64) {
        let mut count = 0u64;
        let words = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| {
                let w = a & b;
                count += w.count_ones() as u64;
                w
            })
            .collect();
        (Bitset { words }, count)
    }
}

struct Extension {
    item: ItemId,
    attribute: u32,
    tids: Bitset,
    count: u64,
}

/// Mines every itemset with support `>= min_support` and length
/// `<= max_len` from the transactions in `points`, plus the global subgroup.
///
/// `item_attributes[i]` names the attribute of item `i`; itemsets never hold
/// two items of the same attribute. Without it every item is its own attribute.
pub fn mine_frequent(
    points: &CsrPattern,
    item_attributes: Option<&[u32]>,
    config: &MiningConfig,
) -> Result<SubgroupCatalog> {
    config.validate()?;
    let n = points.n_rows();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let n_items = points.n_cols();
    if let Some(attrs) = item_attributes {
        if attrs.len() != n_items {
            return Err(Error::DimensionMismatch {
                expected: n_items,
                found: attrs.len(),
            });
        }
    }
    let min_count = config.min_count(n);

    let mut columns: Vec<Bitset> = (0..n_items).map(|_| Bitset::zeros(n)).collect();
    for (t, row) in points.rows().enumerate() {
        for &i in row {
            columns[i as usize].set(t);
        }
    }
    let roots: Vec<Extension> = columns
        .into_iter()
        .enumerate()
        .filter_map(|(i, tids)| {
            let count = tids.count();
            (count >= min_count).then(|| Extension {
                item: i as ItemId,
                attribute: item_attributes.map_or(i as u32, |a| a[i]),
                tids,
                count,
            })
        })
        .collect();

    let mut out = vec![Subgroup {
        items: Vec::new(),
        support: 1.0,
        count: n as u64,
        index: 0,
    }];
    let mut prefix = Vec::with_capacity(config.max_len);
    extend(&mut prefix, &roots, min_count, n, config.max_len, &mut out);
    SubgroupCatalog::from_subgroups(out, n_items, n, *config)
}

fn extend(
    prefix: &mut Vec<ItemId>,
    siblings: &[Extension],
    min_count: u64,
    n: usize,
    max_len: usize,
    out: &mut Vec<Subgroup>,
) {
    for (k, head) in siblings.iter().enumerate() {
        prefix.push(head.item);
        out.push(Subgroup {
            items: prefix.clone(),
            support: head.count as f64 / n as f64,
            count: head.count,
            index: 0,
        });
        if prefix.len() < max_len {
            let children: Vec<Extension> = siblings[k + 1..]
                .iter()
                .filter(|s| s.attribute != head.attribute)
                .filter_map(|s| {
                    let (tids, count) = head.tids.and(&s.tids);
                    (count >= min_count).then_some(Extension {
                        item: s.item,
                        attribute: s.attribute,
                        tids,
                        count,
                    })
                })
                .collect();
            if !children.is_empty() {
                extend(prefix, &children, min_count, n, max_len, out);
            }
        }
        prefix.pop();
    }
}
