//! Turning tables into metadata records, outcome indicators and batches.

use std::ops::Range;

use driftscope_core::catalog::ItemCatalog;
use driftscope_core::{MetricSpec, OutcomeRecord, RawValue};

use crate::error::{AppError, AppResult};
use crate::io::Table;

/// Columns that never act as metadata.
pub const RESERVED_COLUMNS: [&str; 6] = ["y", "y_hat", "alpha", "beta", "batch", "altered"];

/// Indices of metadata columns: everything not reserved and not excluded.
pub fn metadata_columns(table: &Table, exclude: &[String]) -> Vec<usize> {
    (0..table.columns.len())
        .filter(|&c| {
            let name = table.columns[c].as_str();
            !RESERVED_COLUMNS.contains(&name) && !exclude.iter().any(|e| e == name)
        })
        .collect()
}

pub fn raw_rows(table: &Table, columns: &[usize]) -> Vec<Vec<RawValue>> {
    table
        .rows
        .iter()
        .map(|r| columns.iter().map(|&c| RawValue::parse(&r[c])).collect())
        .collect()
}

pub fn column_names(table: &Table, columns: &[usize]) -> Vec<String> {
    columns.iter().map(|&c| table.columns[c].clone()).collect()
}

/// Sizes of `k` contiguous batches over `n` rows, differing by at most one.
pub fn equal_batches(n: usize, k: usize) -> Vec<usize> {
    (0..k).map(|i| n * (i + 1) / k - n * i / k).collect()
}

pub fn ranges(sizes: &[usize]) -> Vec<Range<usize>> {
    let mut start = 0;
    sizes
        .iter()
        .map(|&s| {
            let r = start..start + s;
            start += s;
            r
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Batching {
    /// Consecutive runs of equal values in the `batch` column.
    Column,
    Size(usize),
    Count(usize),
}

/// Batch sizes for a table under a batching rule.
pub fn batch_sizes(table: &Table, batching: Batching) -> AppResult<Vec<usize>> {
    let n = table.len();
    match batching {
        Batching::Size(0) | Batching::Count(0) => {
            Err(AppError::usage("batch size and count must be at least 1"))
        }
        Batching::Size(s) => Ok((0..n.div_ceil(s)).map(|i| s.min(n - i * s)).collect()),
        Batching::Count(k) => Ok(equal_batches(n, k)),
        Batching::Column => {
            let c = table
                .column("batch")
                .ok_or_else(|| AppError::data("input has no `batch` column"))?;
            let mut sizes: Vec<usize> = Vec::new();
            let mut last: Option<&str> = None;
            for row in &table.rows {
                if last == Some(row[c].as_str()) {
                    *sizes.last_mut().expect("open batch") += 1;
                } else {
                    sizes.push(1);
                    last = Some(row[c].as_str());
                }
            }
            Ok(sizes)
        }
    }
}

fn parse_flag(cell: &str, row: usize, column: &str) -> AppResult<i64> {
    cell.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.fract() == 0.0 && v.is_finite())
        .map(|v| v as i64)
        .ok_or_else(|| {
            AppError::data(format!(
                "row {row}: column `{column}` holds `{cell}`, expected an integer label"
            ))
        })
}

/// Outcome indicators per row. Explicit `alpha`/`beta` columns are used when
/// the metric is `Explicit` or when `y` is absent.
pub fn outcome_flags(table: &Table, metric: MetricSpec) -> AppResult<Vec<(bool, bool)>> {
    let explicit = metric == MetricSpec::Explicit || table.column("y").is_none();
    let (a, b, names) = if explicit {
        (
            table.column("alpha"),
            table.column("beta"),
            ("alpha", "beta"),
        )
    } else {
        (table.column("y"), table.column("y_hat"), ("y", "y_hat"))
    };
    let (Some(a), Some(b)) = (a, b) else {
        return Err(AppError::data(format!(
            "input needs `{}` and `{}` columns",
            names.0, names.1
        )));
    };
    let mut out = Vec::with_capacity(table.len());
    for (i, row) in table.rows.iter().enumerate() {
        let line = i + 1;
        let x = parse_flag(&row[a], line, names.0)?;
        let y = parse_flag(&row[b], line, names.1)?;
        let flags = if explicit {
            if !(0..=1).contains(&x) || !(0..=1).contains(&y) || (x == 1 && y == 1) {
                return Err(AppError::data(format!(
                    "row {line}: alpha/beta must be 0/1 and not both 1"
                )));
            }
            (x == 1, y == 1)
        } else {
            metric.outcome(x, y)
        };
        out.push(flags);
    }
    Ok(out)
}

/// Encodes every row of `table` into an outcome record.
pub fn outcome_records(
    table: &Table,
    catalog: &ItemCatalog,
    metric: MetricSpec,
) -> AppResult<Vec<OutcomeRecord>> {
    let encoder = catalog.column_encoder(&table.columns);
    let flags = outcome_flags(table, metric)?;
    let mut skipped = 0;
    let records = table
        .rows
        .iter()
        .zip(flags)
        .map(|(row, (alpha, beta))| {
            let raw: Vec<RawValue> = row.iter().map(|c| RawValue::parse(c)).collect();
            let enc = encoder.encode(&raw);
            skipped += enc.skipped;
            OutcomeRecord {
                items: enc.items,
                alpha,
                beta,
            }
        })
        .collect();
    if skipped > 0 {
        log::warn!("{skipped} metadata values matched no catalog item and were ignored");
    }
    Ok(records)
}
