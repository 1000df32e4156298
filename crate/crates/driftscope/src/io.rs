//! Tabular input, JSON artifacts and atomic writes.

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{AppError, AppResult};

/// A header plus string cells, row-major.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: Vec<String>) -> Self {
        Table {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Reads CSV or JSONL chosen by extension; a trailing `.gz` is decompressed.
    pub fn read(path: &Path) -> AppResult<Table> {
        let file = File::open(path).map_err(|e| AppError::io(path, e))?;
        let name = path.to_string_lossy();
        let (reader, name): (Box<dyn Read>, &str) = match name.strip_suffix(".gz") {
            Some(stem) => (Box::new(GzDecoder::new(file)), stem),
            None => (Box::new(file), &name),
        };
        let table = if name.ends_with(".jsonl") || name.ends_with(".ndjson") {
            Table::read_jsonl(BufReader::new(reader))
        } else {
            Table::read_csv(reader)
        };
        table.map_err(|e| match e {
            AppError::Data(msg) => AppError::Data(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn read_csv<R: Read>(reader: R) -> AppResult<Table> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let columns: Vec<String> = rdr
            .headers()
            .map_err(|e| AppError::data(format!("bad header: {e}")))?
            .iter()
            .map(str::to_owned)
            .collect();
        if columns.is_empty() {
            return Err(AppError::data("empty header"));
        }
        let mut table = Table::new(columns);
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| AppError::data(format!("row {}: {e}", i + 1)))?;
            table.rows.push(rec.iter().map(str::to_owned).collect());
        }
        Ok(table)
    }

    /// One JSON object per line. Columns are the union of keys in order of
    /// first appearance; absent keys become empty cells.
    pub fn read_jsonl<R: BufRead>(reader: R) -> AppResult<Table> {
        let mut columns: Vec<String> = Vec::new();
        let mut objects = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| AppError::data(format!("line {}: {e}", i + 1)))?;
            if line.trim().is_empty() {
                continue;
            }
            let obj: serde_json::Map<String, serde_json::Value> = serde_json::from_str(&line)
                .map_err(|e| AppError::data(format!("line {}: {e}", i + 1)))?;
            for k in obj.keys() {
                if !columns.contains(k) {
                    columns.push(k.clone());
                }
            }
            objects.push(obj);
        }
        let mut table = Table::new(columns);
        for obj in objects {
            let row = table
                .columns
                .iter()
                .map(|c| match obj.get(c) {
                    None | Some(serde_json::Value::Null) => String::new(),
                    Some(serde_json::Value::String(s)) => s.clone(),
                    Some(serde_json::Value::Bool(b)) => u8::from(*b).to_string(),
                    Some(v) => v.to_string(),
                })
                .collect();
            table.rows.push(row);
        }
        Ok(table)
    }

    pub fn to_csv(&self) -> AppResult<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| AppError::data(format!("csv encoding: {e}"));
        w.write_record(&self.columns).map_err(err)?;
        for row in &self.rows {
            w.write_record(row).map_err(err)?;
        }
        w.into_inner()
            .map_err(|e| AppError::data(format!("csv encoding: {e}")))
    }
}

/// Writes through a temp file in the target directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> AppResult<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| AppError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| AppError::io(path, e))?;
    tmp.as_file()
        .sync_all()
        .map_err(|e| AppError::io(path, e))?;
    tmp.persist(path).map_err(|e| AppError::io(path, e.error))?;
    Ok(())
}

pub fn to_json_pretty<T: Serialize>(value: &T) -> AppResult<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(value)
        .map_err(|e| AppError::data(format!("json encoding: {e}")))?;
    out.push(b'\n');
    Ok(out)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> AppResult<()> {
    write_atomic(path, &to_json_pretty(value)?)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> AppResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| AppError::data(format!("{}: {e}", path.display())))
}

/// One compact JSON document per line.
pub fn to_jsonl<T: Serialize>(values: &[T]) -> AppResult<Vec<u8>> {
    let mut out = Vec::new();
    for v in values {
        serde_json::to_writer(&mut out, v)
            .map_err(|e| AppError::data(format!("json encoding: {e}")))?;
        out.push(b'\n');
    }
    Ok(out)
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> AppResult<Vec<T>> {
    let file = File::open(path).map_err(|e| AppError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| AppError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line)
                .map_err(|e| AppError::data(format!("{}:{}: {e}", path.display(), i + 1)))?,
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_and_jsonl_agree() {
        let csv = "a,b,y\n1, x ,0\n2,,1\n";
        let jsonl = "{\"a\":1,\"b\":\"x\",\"y\":0}\n\n{\"a\":2,\"b\":null,\"y\":true}\n";
        let t1 = Table::read_csv(csv.as_bytes()).unwrap();
        let t2 = Table::read_jsonl(jsonl.as_bytes()).unwrap();
        assert_eq!(t1, t2);
        assert_eq!(t1.rows[0], vec!["1", "x", "0"]);
    }

    #[test]
    fn ragged_csv_reports_row() {
        let err = Table::read_csv("a,b\n1,2\n3\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("row 2"), "{err}");
    }

    #[test]
    fn atomic_write_and_gzip_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested/t.csv.gz");
        let table = Table {
            columns: vec!["a".into()],
            rows: vec![vec!["1".into()], vec!["2".into()]],
        };
        let mut gz = flate2::write::GzEncoder::new(Vec::new(), flate2::Compression::default());
        gz.write_all(&table.to_csv().unwrap()).unwrap();
        write_atomic(&path, &gz.finish().unwrap()).unwrap();
        assert_eq!(Table::read(&path).unwrap(), table);
        let leftovers = std::fs::read_dir(path.parent().unwrap()).unwrap().count();
        assert_eq!(leftovers, 1);
    }
}
