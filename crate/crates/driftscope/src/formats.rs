//! Persisted catalogs and rendering of reports as CSV, JSONL or Markdown.

use std::fmt::Write as _;
use std::str::FromStr;

use driftscope_core::catalog::ItemCatalog;
use driftscope_core::{DriftReport, SubgroupCatalog};
use serde::{Deserialize, Serialize};

use crate::error::{AppError, AppResult};
use crate::io::Table;

/// Item catalog plus mined subgroups, as written by `mine`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogBundle {
    pub items: ItemCatalog,
    pub subgroups: SubgroupCatalog,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Jsonl,
    Md,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Jsonl => "jsonl",
            Format::Md => "md",
        }
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "jsonl" => Ok(Format::Jsonl),
            "md" | "markdown" => Ok(Format::Md),
            other => Err(format!("unknown format `{other}` (csv, jsonl, md)")),
        }
    }
}

pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// Shortest round-trip decimal, so output is bit-stable.
pub fn num(v: f64) -> String {
    format!("{v}")
}

pub const REPORT_COLUMNS: [&str; 9] = [
    "batch_id",
    "subgroup_id",
    "items",
    "support",
    "h_ref",
    "h_cur",
    "delta_h",
    "t",
    "drifted",
];

/// One row per scored subgroup.
pub fn report_table(report: &DriftReport, bundle: &CatalogBundle) -> Table {
    let mut table = Table::new(REPORT_COLUMNS.iter().map(|s| (*s).to_owned()).collect());
    for r in &report.records {
        let sg = bundle.subgroups.get(r.subgroup);
        table.rows.push(vec![
            report.batch_id.to_string(),
            r.subgroup.to_string(),
            sg.map(|s| bundle.items.describe(&s.items))
                .unwrap_or_default(),
            sg.map(|s| num(s.support)).unwrap_or_default(),
            opt(r.h_ref),
            opt(r.h_cur),
            opt(r.delta_h),
            num(r.t_value),
            u8::from(r.drifted).to_string(),
        ]);
    }
    table
}

fn json_cell(cell: &str) -> serde_json::Value {
    if cell.is_empty() {
        return serde_json::Value::Null;
    }
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() && !cell.starts_with('+') => serde_json::Number::from_f64(v)
            .map(serde_json::Value::Number)
            .unwrap_or_else(|| cell.into()),
        _ => cell.into(),
    }
}

fn md_escape(cell: &str) -> String {
    cell.replace('|', "\\|")
}

pub fn render(table: &Table, format: Format) -> AppResult<Vec<u8>> {
    match format {
        Format::Csv => table.to_csv(),
        Format::Jsonl => {
            let mut out = Vec::new();
            for row in &table.rows {
                let obj: serde_json::Map<String, serde_json::Value> = table
                    .columns
                    .iter()
                    .cloned()
                    .zip(row.iter().map(|c| json_cell(c)))
                    .collect();
                serde_json::to_writer(&mut out, &obj)
                    .map_err(|e| AppError::data(format!("json encoding: {e}")))?;
                out.push(b'\n');
            }
            Ok(out)
        }
        Format::Md => {
            let mut s = String::new();
            let _ = writeln!(
                s,
                "| {} |",
                table
                    .columns
                    .iter()
                    .map(|c| md_escape(c))
                    .collect::<Vec<_>>()
                    .join(" | ")
            );
            let _ = writeln!(s, "|{}", "---|".repeat(table.columns.len()));
            for row in &table.rows {
                let _ = writeln!(
                    s,
                    "| {} |",
                    row.iter()
                        .map(|c| md_escape(c))
                        .collect::<Vec<_>>()
                        .join(" | ")
                );
            }
            Ok(s.into_bytes())
        }
    }
}
