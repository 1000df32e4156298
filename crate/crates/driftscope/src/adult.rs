//! Loader for the UCI Adult census files (`adult.data`, `adult.test`).

use std::collections::BTreeSet;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use driftscope_core::RawValue;
use flate2::read::GzDecoder;

use crate::error::{AppError, AppResult};
use crate::io::Table;

pub const COLUMNS: [&str; 14] = [
    "age",
    "workclass",
    "fnlwgt",
    "education",
    "education-num",
    "marital-status",
    "occupation",
    "relationship",
    "race",
    "sex",
    "capital-gain",
    "capital-loss",
    "hours-per-week",
    "native-country",
];

const NUMERIC: [&str; 6] = [
    "age",
    "fnlwgt",
    "education-num",
    "capital-gain",
    "capital-loss",
    "hours-per-week",
];

/// Attributes used as subgroup metadata. `fnlwgt` is a sampling weight and
/// `education-num` duplicates `education`.
pub const METADATA: [&str; 12] = [
    "age",
    "workclass",
    "education",
    "marital-status",
    "occupation",
    "relationship",
    "race",
    "sex",
    "capital-gain",
    "capital-loss",
    "hours-per-week",
    "native-country",
];

pub const ROWS: usize = 48_842;

#[derive(Debug, Clone)]
pub struct AdultData {
    /// Cells of the 14 attributes, `?` kept verbatim.
    pub rows: Vec<Vec<String>>,
    /// 1 for `>50K`.
    pub labels: Vec<u32>,
}

/// `$DRIFTSCOPE_ADULT_DIR`, else the copy shipped in the workspace.
pub fn default_dir() -> PathBuf {
    std::env::var_os("DRIFTSCOPE_ADULT_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/adult"))
}

fn open(dir: &Path, stem: &str) -> AppResult<Box<dyn BufRead>> {
    let gz = dir.join(format!("{stem}.gz"));
    let plain = dir.join(stem);
    if gz.exists() {
        let f = std::fs::File::open(&gz).map_err(|e| AppError::io(&gz, e))?;
        Ok(Box::new(BufReader::new(GzDecoder::new(f))))
    } else {
        let f = std::fs::File::open(&plain).map_err(|e| AppError::io(&plain, e))?;
        Ok(Box::new(BufReader::new(f)))
    }
}

fn parse_into(reader: Box<dyn BufRead>, source: &str, data: &mut AdultData) -> AppResult<()> {
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| AppError::data(format!("{source}:{}: {e}", i + 1)))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('|') {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != COLUMNS.len() + 1 {
            return Err(AppError::data(format!(
                "{source}:{}: expected 15 fields, found {}",
                i + 1,
                cells.len()
            )));
        }
        let label = match cells[14].trim_end_matches('.') {
            ">50K" => 1,
            "<=50K" => 0,
            other => {
                return Err(AppError::data(format!(
                    "{source}:{}: unknown income label `{other}`",
                    i + 1
                )))
            }
        };
        data.rows
            .push(cells[..14].iter().map(|c| (*c).to_owned()).collect());
        data.labels.push(label);
    }
    Ok(())
}

pub fn load(dir: &Path) -> AppResult<AdultData> {
    let mut data = AdultData {
        rows: Vec::with_capacity(ROWS),
        labels: Vec::with_capacity(ROWS),
    };
    parse_into(open(dir, "adult.data")?, "adult.data", &mut data)?;
    parse_into(open(dir, "adult.test")?, "adult.test", &mut data)?;
    Ok(data)
}

fn column(name: &str) -> usize {
    COLUMNS
        .iter()
        .position(|c| *c == name)
        .expect("known adult column")
}

impl AdultData {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn metadata_names() -> Vec<String> {
        METADATA.iter().map(|s| (*s).to_owned()).collect()
    }

    /// Metadata values of the selected rows.
    pub fn metadata(&self, rows: &[usize]) -> Vec<Vec<RawValue>> {
        let cols: Vec<usize> = METADATA.iter().map(|n| column(n)).collect();
        rows.iter()
            .map(|&r| {
                cols.iter()
                    .map(|&c| RawValue::parse(&self.rows[r][c]))
                    .collect()
            })
            .collect()
    }

    /// Model features for every row: numeric attributes as-is, categorical
    /// ones as ordinal codes over their sorted distinct values.
    pub fn features(&self) -> Vec<Vec<f64>> {
        let vocab: Vec<Option<Vec<&str>>> = COLUMNS
            .iter()
            .enumerate()
            .map(|(c, name)| {
                (!NUMERIC.contains(name)).then(|| {
                    let set: BTreeSet<&str> = self.rows.iter().map(|r| r[c].as_str()).collect();
                    set.into_iter().collect()
                })
            })
            .collect();
        self.rows
            .iter()
            .map(|r| {
                r.iter()
                    .zip(&vocab)
                    .map(|(cell, v)| match v {
                        Some(values) => values
                            .binary_search(&cell.as_str())
                            .expect("value in vocabulary")
                            as f64,
                        None => cell.parse().unwrap_or(f64::NAN),
                    })
                    .collect()
            })
            .collect()
    }

    /// The selected rows as a table with `y` and, when given, `y_hat`.
    pub fn table(&self, rows: &[usize], labels: &[u32], predictions: Option<&[u32]>) -> Table {
        let mut columns: Vec<String> = COLUMNS.iter().map(|s| (*s).to_owned()).collect();
        columns.push("y".into());
        if predictions.is_some() {
            columns.push("y_hat".into());
        }
        let mut table = Table::new(columns);
        for (k, &r) in rows.iter().enumerate() {
            let mut row = self.rows[r].clone();
            row.push(labels[k].to_string());
            if let Some(p) = predictions {
                row.push(p[k].to_string());
            }
            table.rows.push(row);
        }
        table
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_both_files_formats() {
        let text = "|1x3 Cross validator\n25, Private, 226802, 11th, 7, Never-married, Machine-op-inspct, Own-child, Black, Male, 0, 0, 40, United-States, >50K.\n\n";
        let mut data = AdultData {
            rows: vec![],
            labels: vec![],
        };
        parse_into(Box::new(text.as_bytes()), "t", &mut data).unwrap();
        assert_eq!(data.labels, vec![1]);
        assert_eq!(data.rows[0][1], "Private");
        let f = data.features();
        assert_eq!(f[0][0], 25.0);
        assert_eq!(f[0][1], 0.0);
        let bad = "1, 2\n";
        assert!(parse_into(Box::new(bad.as_bytes()), "t", &mut data).is_err());
    }
}
