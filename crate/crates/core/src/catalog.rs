//! Items, discretization and outcome indicators.
//!
//! An item is an `attribute=value` pair. Continuous attributes are cut into
//! equal-frequency bins whose edges are fixed when the catalog is built from
//! the reference records; categorical attributes pass through unchanged.

use alloc::borrow::ToOwned;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense item identifier.
pub type ItemId = u32;

pub const DEFAULT_QUANTILE_BINS: usize = 4;

/// A raw metadata value as read from a record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RawValue {
    Missing,
    Number(f64),
    Text(String),
}

impl RawValue {
    /// Parses a textual cell. Empty cells and `?` are missing; anything that
    /// parses as a finite float is numeric.
    pub fn parse(cell: &str) -> RawValue {
        let cell = cell.trim();
        if cell.is_empty() || cell == "?" {
            return RawValue::Missing;
        }
        match cell.parse::<f64>() {
            Ok(v) if v.is_finite() => RawValue::Number(v),
            _ => RawValue::Text(cell.to_owned()),
        }
    }

    pub fn is_missing(&self) -> bool {
        matches!(self, RawValue::Missing)
    }

    fn as_text(&self) -> Option<String> {
        match self {
            RawValue::Missing => None,
            RawValue::Number(v) => Some(format_number(*v)),
            RawValue::Text(s) => Some(s.clone()),
        }
    }

    fn as_number(&self) -> Option<f64> {
        match self {
            RawValue::Missing => None,
            RawValue::Number(v) => Some(*v),
            RawValue::Text(s) => s.trim().parse::<f64>().ok().filter(|v| v.is_finite()),
        }
    }
}

/// Shortest round-trip decimal form (`25`, `0.5`, `1e-7`).
pub fn format_number(v: f64) -> String {
    format!("{v}")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BinningRule {
    Categorical,
    Quantile { bins: usize },
}

/// Per-attribute binning rules. Attributes without an explicit rule are
/// quantile-binned when every observed value is numeric and passed through
/// as categorical otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinningConfig {
    pub default_bins: usize,
    pub rules: BTreeMap<String, BinningRule>,
}

impl Default for BinningConfig {
    fn default() -> Self {
        BinningConfig {
            default_bins: DEFAULT_QUANTILE_BINS,
            rules: BTreeMap::new(),
        }
    }
}

impl BinningConfig {
    pub fn with_rule(mut self, attribute: &str, rule: BinningRule) -> Self {
        self.rules.insert(attribute.to_owned(), rule);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Item {
    pub attribute: String,
    pub value: String,
    pub id: ItemId,
}

impl Item {
    pub fn label(&self) -> String {
        format!("{}={}", self.attribute, self.value)
    }
}

/// How one attribute maps raw values to items.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Discretizer {
    /// Observed values in ascending lexicographic order.
    Categorical { values: Vec<String> },
    /// Bin boundaries `[min, c1, .., c_k, max]`: the first bin is closed
    /// `[min, c1]`, the following ones are half-open `(c_i, c_{i+1}]`.
    Quantile {
        #[serde(with = "decimal_edges")]
        edges: Vec<f64>,
    },
}

impl Discretizer {
    fn n_items(&self) -> usize {
        match self {
            Discretizer::Categorical { values } => values.len(),
            Discretizer::Quantile { edges } => edges.len() - 1,
        }
    }

    fn labels(&self) -> Vec<String> {
        match self {
            Discretizer::Categorical { values } => values.clone(),
            Discretizer::Quantile { edges } => (0..edges.len() - 1)
                .map(|b| {
                    let open = if b == 0 { '[' } else { '(' };
                    format!(
                        "{open}{},{}]",
                        format_number(edges[b]),
                        format_number(edges[b + 1])
                    )
                })
                .collect(),
        }
    }

    /// Position of `value` inside this attribute, `None` when it maps to no item.
    fn locate(&self, value: &RawValue) -> Option<usize> {
        match self {
            Discretizer::Categorical { values } => {
                let text = value.as_text()?;
                values.binary_search(&text).ok()
            }
            Discretizer::Quantile { edges } => {
                let v = value.as_number()?;
                let interior = &edges[1..edges.len() - 1];
                Some(interior.partition_point(|e| *e < v))
            }
        }
    }
}

/// Bin boundaries computed by nearest-rank quantiles: the k-th cut is the
/// sorted value at rank `ceil(k * n / bins)`.
pub fn quantile_edges(values: &[f64], bins: usize) -> Result<Vec<f64>> {
    if bins == 0 {
        return Err(Error::InvalidParameter(
            "quantile bin count must be at least 1".into(),
        ));
    }
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let (min, max) = (sorted[0], sorted[n - 1]);
    let mut edges = Vec::with_capacity(bins + 1);
    edges.push(min);
    for k in 1..bins {
        let cut = sorted[(k * n).div_ceil(bins).max(1) - 1];
        if cut < max && (edges.len() == 1 || *edges.last().unwrap() != cut) {
            edges.push(cut);
        }
    }
    edges.push(max);
    Ok(edges)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attribute {
    pub name: String,
    pub discretizer: Discretizer,
    /// Id of the attribute's first item; ids are contiguous per attribute.
    pub first_item: ItemId,
}

/// Bidirectional map between `attribute=value` items and dense ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CatalogRepr", into = "CatalogRepr")]
pub struct ItemCatalog {
    attributes: Vec<Attribute>,
    items: Vec<Item>,
    item_attribute: Vec<u32>,
    by_name: BTreeMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct CatalogRepr {
    attributes: Vec<AttributeRepr>,
    items: Vec<Item>,
}

#[derive(Serialize, Deserialize)]
struct AttributeRepr {
    name: String,
    discretizer: Discretizer,
}

impl From<ItemCatalog> for CatalogRepr {
    fn from(c: ItemCatalog) -> Self {
        CatalogRepr {
            attributes: c
                .attributes
                .into_iter()
                .map(|a| AttributeRepr {
                    name: a.name,
                    discretizer: a.discretizer,
                })
                .collect(),
            items: c.items,
        }
    }
}

impl TryFrom<CatalogRepr> for ItemCatalog {
    type Error = Error;

    fn try_from(repr: CatalogRepr) -> Result<Self> {
        let catalog = ItemCatalog::from_discretizers(
            repr.attributes
                .into_iter()
                .map(|a| (a.name, a.discretizer))
                .collect(),
        )?;
        if catalog.items != repr.items {
            return Err(Error::InvalidParameter(
                "item list does not match the binning rules".into(),
            ));
        }
        Ok(catalog)
    }
}

/// Result of encoding one record.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EncodedRecord {
    /// Ascending item ids.
    pub items: Vec<ItemId>,
    /// Non-missing values that matched no item (unseen categories).
    pub skipped: usize,
}

impl ItemCatalog {
    /// Builds the catalog from reference records laid out as `rows[i][c]`
    /// for the attribute named `columns[c]`.
    pub fn build(
        columns: &[String],
        rows: &[Vec<RawValue>],
        config: &BinningConfig,
    ) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyInput);
        }
        let mut discretizers = Vec::with_capacity(columns.len());
        for (c, name) in columns.iter().enumerate() {
            let column: Vec<&RawValue> = rows
                .iter()
                .map(|r| r.get(c).unwrap_or(&RawValue::Missing))
                .filter(|v| !v.is_missing())
                .collect();
            if column.is_empty() {
                return Err(Error::AllMissing(name.clone()));
            }
            let rule = match config.rules.get(name) {
                Some(rule) => *rule,
                None if column.iter().all(|v| matches!(v, RawValue::Number(_))) => {
                    BinningRule::Quantile {
                        bins: config.default_bins,
                    }
                }
                None => BinningRule::Categorical,
            };
            let discretizer = match rule {
                BinningRule::Categorical => {
                    let mut values: Vec<String> =
                        column.iter().filter_map(|v| v.as_text()).collect();
                    values.sort();
                    values.dedup();
                    Discretizer::Categorical { values }
                }
                BinningRule::Quantile { bins } => {
                    let numbers: Vec<f64> = column.iter().filter_map(|v| v.as_number()).collect();
                    if numbers.is_empty() {
                        return Err(Error::AllMissing(name.clone()));
                    }
                    Discretizer::Quantile {
                        edges: quantile_edges(&numbers, bins)?,
                    }
                }
            };
            discretizers.push((name.clone(), discretizer));
        }
        Self::from_discretizers(discretizers)
    }

    /// Assembles a catalog from fixed per-attribute rules.
    pub fn from_discretizers(discretizers: Vec<(String, Discretizer)>) -> Result<Self> {
        let mut attributes = Vec::with_capacity(discretizers.len());
        let mut items = Vec::new();
        let mut item_attribute = Vec::new();
        let mut by_name = BTreeMap::new();
        for (a, (name, discretizer)) in discretizers.into_iter().enumerate() {
            if let Discretizer::Quantile { edges } = &discretizer {
                if edges.len() < 2 || edges.windows(2).any(|w| w[0] > w[1]) {
                    return Err(Error::InvalidParameter(format!(
                        "bad bin edges for `{name}`"
                    )));
                }
            }
            if by_name.insert(name.clone(), a).is_some() {
                return Err(Error::InvalidParameter(format!(
                    "duplicate attribute `{name}`"
                )));
            }
            let first_item = items.len() as ItemId;
            for value in discretizer.labels() {
                let id = items.len() as ItemId;
                items.push(Item {
                    attribute: name.clone(),
                    value,
                    id,
                });
                item_attribute.push(a as u32);
            }
            attributes.push(Attribute {
                name,
                discretizer,
                first_item,
            });
        }
        Ok(ItemCatalog {
            attributes,
            items,
            item_attribute,
            by_name,
        })
    }

    pub fn n_items(&self) -> usize {
        self.items.len()
    }

    pub fn items(&self) -> &[Item] {
        &self.items
    }

    pub fn item(&self, id: ItemId) -> Option<&Item> {
        self.items.get(id as usize)
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    /// Attribute index of every item, usable as the mining exclusivity map.
    pub fn item_attributes(&self) -> &[u32] {
        &self.item_attribute
    }

    pub fn attribute_index(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    /// Id of the item `attribute=value` where `value` is the item label
    /// (for binned attributes the bin label such as `(25,50]`).
    pub fn lookup(&self, attribute: &str, value: &str) -> Option<ItemId> {
        let attr = &self.attributes[self.attribute_index(attribute)?];
        let n = attr.discretizer.n_items();
        (0..n)
            .map(|k| attr.first_item + k as ItemId)
            .find(|&id| self.items[id as usize].value == value)
    }

    /// Parses `attr=value` and resolves it to an id.
    pub fn lookup_label(&self, label: &str) -> Result<ItemId> {
        let (attr, value) = label
            .split_once('=')
            .ok_or_else(|| Error::UnknownItem(label.to_owned()))?;
        self.lookup(attr.trim(), value.trim())
            .ok_or_else(|| Error::UnknownItem(label.to_owned()))
    }

    /// Maps a value of the named attribute to its item.
    pub fn item_for(&self, attribute: usize, value: &RawValue) -> Option<ItemId> {
        let attr = self.attributes.get(attribute)?;
        attr.discretizer
            .locate(value)
            .map(|k| attr.first_item + k as ItemId)
    }

    /// Encodes a record given as `(attribute, value)` pairs. Attributes
    /// unknown to the catalog are ignored; missing values produce no item.
    pub fn encode(&self, record: &[(&str, RawValue)]) -> EncodedRecord {
        let mut out = EncodedRecord::default();
        for (name, value) in record {
            let Some(a) = self.attribute_index(name) else {
                continue;
            };
            self.push_value(a, value, &mut out);
        }
        out.items.sort_unstable();
        out
    }

    fn push_value(&self, attribute: usize, value: &RawValue, out: &mut EncodedRecord) {
        if value.is_missing() {
            return;
        }
        match self.item_for(attribute, value) {
            Some(id) => out.items.push(id),
            None => out.skipped += 1,
        }
    }

    /// Encoder for rows whose cells follow `columns`. Columns that are not
    /// catalog attributes (labels, predictions) are skipped.
    pub fn column_encoder(&self, columns: &[String]) -> ColumnEncoder<'_> {
        ColumnEncoder {
            catalog: self,
            slots: columns.iter().map(|c| self.attribute_index(c)).collect(),
        }
    }

    /// Human-readable `attr=value, ...` description of an itemset.
    pub fn describe(&self, items: &[ItemId]) -> String {
        if items.is_empty() {
            return "(all)".to_string();
        }
        let labels: Vec<String> = items
            .iter()
            .map(|&id| {
                self.item(id)
                    .map(Item::label)
                    .unwrap_or_else(|| format!("#{id}"))
            })
            .collect();
        labels.join(", ")
    }

    /// Parses an itemset description such as `sex=Female,age=(25,36]`.
    /// Commas inside interval brackets do not separate items.
    pub fn parse_itemset(&self, text: &str) -> Result<Vec<ItemId>> {
        let mut ids: Vec<ItemId> = split_items(text)
            .into_iter()
            .map(|t| self.lookup_label(t))
            .collect::<Result<_>>()?;
        ids.sort_unstable();
        ids.dedup();
        Ok(ids)
    }
}

fn split_items(text: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, ch) in text.char_indices() {
        match ch {
            '(' | '[' => depth += 1,
            ')' | ']' => depth -= 1,
            ',' if depth <= 0 => {
                parts.push(text[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(text[start..].trim());
    parts.retain(|p| !p.is_empty());
    parts
}

/// Encodes positional rows against a catalog.
#[derive(Debug, Clone)]
pub struct ColumnEncoder<'a> {
    catalog: &'a ItemCatalog,
    slots: Vec<Option<usize>>,
}

impl ColumnEncoder<'_> {
    pub fn encode(&self, row: &[RawValue]) -> EncodedRecord {
        let mut out = EncodedRecord::default();
        for (slot, value) in self.slots.iter().zip(row) {
            if let Some(a) = slot {
                self.catalog.push_value(*a, value, &mut out);
            }
        }
        out.items.sort_unstable();
        out
    }
}

/// Which outcomes count as positive (`alpha`) and negative (`beta`) for the
/// monitored ratio `h = alpha / (alpha + beta)`. The positive class is `1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricSpec {
    /// alpha: correct prediction, beta: wrong prediction.
    #[default]
    Accuracy,
    /// alpha: false positive, beta: true negative.
    FalsePositiveRate,
    /// alpha: false negative, beta: true positive.
    FalseNegativeRate,
    /// Explicit `alpha`/`beta` columns.
    Explicit,
}

impl MetricSpec {
    /// Indicators for a labelled prediction. Not meaningful for `Explicit`.
    pub fn outcome(self, y: i64, y_hat: i64) -> (bool, bool) {
        match self {
            MetricSpec::Accuracy | MetricSpec::Explicit => (y == y_hat, y != y_hat),
            MetricSpec::FalsePositiveRate => (y == 0 && y_hat == 1, y == 0 && y_hat == 0),
            MetricSpec::FalseNegativeRate => (y == 1 && y_hat == 0, y == 1 && y_hat == 1),
        }
    }
}

impl core::str::FromStr for MetricSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "accuracy" => Ok(MetricSpec::Accuracy),
            "fpr" | "false_positive_rate" => Ok(MetricSpec::FalsePositiveRate),
            "fnr" | "false_negative_rate" => Ok(MetricSpec::FalseNegativeRate),
            "explicit" => Ok(MetricSpec::Explicit),
            other => Err(Error::InvalidParameter(format!("unknown metric `{other}`"))),
        }
    }
}

/// One monitored instance: its items and outcome indicators.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeRecord {
    pub items: Vec<ItemId>,
    pub alpha: bool,
    pub beta: bool,
}

impl OutcomeRecord {
    pub fn new(mut items: Vec<ItemId>, alpha: bool, beta: bool) -> Result<Self> {
        if alpha && beta {
            return Err(Error::InvalidOutcome { row: 0 });
        }
        items.sort_unstable();
        items.dedup();
        Ok(OutcomeRecord { items, alpha, beta })
    }
}

mod decimal_edges {
    use alloc::string::String;
    use alloc::vec::Vec;

    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(edges: &[f64], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(edges.iter().map(|e| super::format_number(*e)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        let raw: Vec<String> = Vec::deserialize(d)?;
        raw.iter()
            .map(|s| s.parse::<f64>().map_err(D::Error::custom))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn cols(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    fn text(s: &str) -> RawValue {
        RawValue::Text(s.into())
    }

    fn sample_catalog() -> ItemCatalog {
        let rows: Vec<Vec<RawValue>> = (1..=100)
            .map(|age| {
                vec![
                    text(if age % 2 == 0 { "male" } else { "female" }),
                    RawValue::Number(age as f64),
                ]
            })
            .collect();
        ItemCatalog::build(&cols(&["gender", "age"]), &rows, &BinningConfig::default()).unwrap()
    }

    #[test]
    fn categorical_passthrough_gives_one_item_per_value() {
        let c = sample_catalog();
        let genders: Vec<_> = c
            .items()
            .iter()
            .filter(|i| i.attribute == "gender")
            .map(|i| i.value.as_str())
            .collect();
        assert_eq!(genders, ["female", "male"]);
    }

    #[test]
    fn quartiles_of_one_to_hundred() {
        let c = sample_catalog();
        let ages: Vec<_> = c
            .items()
            .iter()
            .filter(|i| i.attribute == "age")
            .map(|i| i.value.as_str())
            .collect();
        assert_eq!(ages, ["[1,25]", "(25,50]", "(50,75]", "(75,100]"]);
    }

    #[test]
    fn encode_maps_to_bins_and_sorts() {
        let c = sample_catalog();
        let e = c.encode(&[("age", RawValue::Number(30.0)), ("gender", text("female"))]);
        assert_eq!(
            e.items,
            vec![
                c.lookup("gender", "female").unwrap(),
                c.lookup("age", "(25,50]").unwrap()
            ]
        );
        assert_eq!(e.skipped, 0);
        let boundary = c.encode(&[("age", RawValue::Number(25.0))]);
        assert_eq!(boundary.items, vec![c.lookup("age", "[1,25]").unwrap()]);
    }

    #[test]
    fn empty_and_unseen_records() {
        let c = sample_catalog();
        assert_eq!(c.encode(&[]), EncodedRecord::default());
        let e = c.encode(&[("gender", text("unknown_value"))]);
        assert!(e.items.is_empty());
        assert_eq!(e.skipped, 1);
        let m = c.encode(&[("gender", RawValue::Missing)]);
        assert_eq!(m, EncodedRecord::default());
    }

    #[test]
    fn zero_records_is_an_error() {
        assert_eq!(
            ItemCatalog::build(&cols(&["a"]), &[], &BinningConfig::default()),
            Err(Error::EmptyInput)
        );
    }

    #[test]
    fn all_missing_attribute_is_named() {
        let rows = vec![
            vec![text("x"), RawValue::Missing],
            vec![text("y"), RawValue::Missing],
        ];
        let err =
            ItemCatalog::build(&cols(&["a", "b"]), &rows, &BinningConfig::default()).unwrap_err();
        assert_eq!(err, Error::AllMissing("b".into()));
    }

    #[test]
    fn heavy_ties_keep_a_point_bin() {
        let mut values = vec![0.0; 90];
        values.extend((1..=10).map(|v| v as f64 * 1000.0));
        let edges = quantile_edges(&values, 4).unwrap();
        assert_eq!(edges, vec![0.0, 0.0, 10000.0]);
    }

    #[test]
    fn constant_column_has_single_bin() {
        assert_eq!(quantile_edges(&[3.0, 3.0, 3.0], 4).unwrap(), vec![3.0, 3.0]);
    }

    #[test]
    fn metric_indicators() {
        assert_eq!(MetricSpec::Accuracy.outcome(1, 1), (true, false));
        assert_eq!(MetricSpec::Accuracy.outcome(0, 1), (false, true));
        assert_eq!(MetricSpec::FalsePositiveRate.outcome(0, 1), (true, false));
        assert_eq!(MetricSpec::FalsePositiveRate.outcome(0, 0), (false, true));
        assert_eq!(MetricSpec::FalsePositiveRate.outcome(1, 0), (false, false));
    }

    #[test]
    fn outcome_rejects_both_flags() {
        assert!(OutcomeRecord::new(vec![], true, true).is_err());
        assert_eq!(
            OutcomeRecord::new(vec![3, 1, 3], true, false)
                .unwrap()
                .items,
            vec![1, 3]
        );
    }

    #[test]
    fn parse_itemset_respects_interval_commas() {
        let c = sample_catalog();
        let ids = c.parse_itemset("gender=female,age=(25,50]").unwrap();
        assert_eq!(ids.len(), 2);
        assert_eq!(c.describe(&ids), "gender=female, age=(25,50]");
        assert!(c.parse_itemset("gender=other").is_err());
    }

    #[test]
    fn numeric_values_in_categorical_columns() {
        let rows = vec![vec![RawValue::Number(3.0)], vec![RawValue::Number(7.0)]];
        let config = BinningConfig::default().with_rule("k", BinningRule::Categorical);
        let c = ItemCatalog::build(&cols(&["k"]), &rows, &config).unwrap();
        assert_eq!(c.lookup("k", "3"), Some(0));
        assert_eq!(
            c.encode(&[("k", RawValue::Text("7".into()))]).items,
            vec![1]
        );
    }
}
