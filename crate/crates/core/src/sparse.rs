//! Compressed sparse row matrices.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary matrix in CSR layout; stored entries are implicit ones.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsrPattern {
    n_rows: usize,
    n_cols: usize,
    indptr: Vec<usize>,
    indices: Vec<u32>,
}

impl CsrPattern {
    pub fn empty(n_cols: usize) -> Self {
        CsrPattern {
            n_rows: 0,
            n_cols,
            indptr: vec![0],
            indices: Vec::new(),
        }
    }

    /// Builds from per-row column lists, which must be strictly ascending and
    /// below `n_cols`. Returns the offending row on error.
    pub fn from_rows<'a, I>(n_cols: usize, rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a [u32]>,
    {
        let mut m = CsrPattern::empty(n_cols);
        for row in rows {
            m.push_row(row)?;
        }
        Ok(m)
    }

    pub fn push_row(&mut self, cols: &[u32]) -> Result<()> {
        let row = self.n_rows;
        for (k, &c) in cols.iter().enumerate() {
            if c as usize >= self.n_cols {
                return Err(Error::ItemOutOfRange {
                    row,
                    item: c,
                    n_items: self.n_cols,
                });
            }
            if k > 0 && cols[k - 1] >= c {
                return Err(Error::InvalidParameter(alloc::format!(
                    "row {row}: columns not strictly ascending"
                )));
            }
        }
        self.indices.extend_from_slice(cols);
        self.indptr.push(self.indices.len());
        self.n_rows += 1;
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.indices[self.indptr[i]..self.indptr[i + 1]]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u32]> + '_ {
        (0..self.n_rows).map(move |i| self.row(i))
    }

    pub fn contains(&self, i: usize, j: u32) -> bool {
        self.row(i).binary_search(&j).is_ok()
    }

    /// Rows `start..end` as a new matrix.
    pub fn slice_rows(&self, start: usize, end: usize) -> CsrPattern {
        let base = self.indptr[start];
        CsrPattern {
            n_rows: end - start,
            n_cols: self.n_cols,
            indptr: self.indptr[start..=end].iter().map(|p| p - base).collect(),
            indices: self.indices[base..self.indptr[end]].to_vec(),
        }
    }
}

/// Real-valued matrix in CSR layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsrMatrix {
    n_rows: usize,
    n_cols: usize,
    indptr: Vec<usize>,
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn empty(n_cols: usize) -> Self {
        CsrMatrix {
            n_rows: 0,
            n_cols,
            indptr: vec![0],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Appends a row; `cols` must be ascending and in range.
    pub fn push_row(&mut self, cols: &[u32], values: &[f64]) -> Result<()> {
        if cols.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: cols.len(),
                found: values.len(),
            });
        }
        if let Some(&c) = cols.iter().find(|&&c| c as usize >= self.n_cols) {
            return Err(Error::ItemOutOfRange {
                row: self.n_rows,
                item: c,
                n_items: self.n_cols,
            });
        }
        self.indices.extend_from_slice(cols);
        self.values.extend_from_slice(values);
        self.indptr.push(self.indices.len());
        self.n_rows += 1;
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn row(&self, i: usize) -> (&[u32], &[f64]) {
        let r = self.indptr[i]..self.indptr[i + 1];
        (&self.indices[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: u32) -> f64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map(|k| vals[k]).unwrap_or(0.0)
    }

    /// Transpose, equivalently the column-compressed view of `self`.
    pub fn transpose(&self) -> CsrMatrix {
        let mut counts = vec![0usize; self.n_cols + 1];
        for &c in &self.indices {
            counts[c as usize + 1] += 1;
        }
        for k in 0..self.n_cols {
            counts[k + 1] += counts[k];
        }
        let indptr = counts.clone();
        let mut next = counts;
        let mut indices = vec![0u32; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                let slot = &mut next[c as usize];
                indices[*slot] = i as u32;
                values[*slot] = v;
                *slot += 1;
            }
        }
        CsrMatrix {
            n_rows: self.n_cols,
            n_cols: self.n_rows,
            indptr,
            indices,
            values,
        }
    }
}

/// `floor(P * B)` for a binary `P` (n x k) and a real `B` (k x m) whose
/// products never exceed one, with entries `>= 1 - eps` counted as one.
///
/// Gustavson row-by-row product with a dense accumulator; `first_col`
/// offsets the output columns so callers can reserve leading columns.
pub fn floor_product(
    p: &CsrPattern,
    b: &CsrMatrix,
    eps: f64,
    first_col: u32,
    n_out_cols: usize,
) -> Result<CsrPattern> {
    if p.n_cols() != b.n_rows() {
        return Err(Error::DimensionMismatch {
            expected: b.n_rows(),
            found: p.n_cols(),
        });
    }
    let m = b.n_cols();
    let mut acc = vec![0.0f64; m];
    let mut touched: Vec<u32> = Vec::new();
    let mut out = CsrPattern {
        n_rows: 0,
        n_cols: n_out_cols,
        indptr: vec![0],
        indices: Vec::new(),
    };
    let threshold = 1.0 - eps;
    for i in 0..p.n_rows() {
        let row = p.row(i);
        let work: usize = row.iter().map(|&k| b.row(k as usize).0.len()).sum();
        if work * 8 >= m {
            // dense: accumulate blindly, then scan every column
            for &k in row {
                let (cols, vals) = b.row(k as usize);
                for (&j, &v) in cols.iter().zip(vals) {
                    acc[j as usize] += v;
                }
            }
            for (j, a) in acc.iter_mut().enumerate() {
                if *a >= threshold {
                    out.indices.push(j as u32 + first_col);
                }
                *a = 0.0;
            }
        } else {
            for &k in row {
                let (cols, vals) = b.row(k as usize);
                for (&j, &v) in cols.iter().zip(vals) {
                    let slot = &mut acc[j as usize];
                    if *slot == 0.0 {
                        touched.push(j);
                    }
                    *slot += v;
                }
            }
            touched.sort_unstable();
            for &j in &touched {
                if acc[j as usize] >= threshold {
                    out.indices.push(j + first_col);
                }
                acc[j as usize] = 0.0;
            }
            touched.clear();
        }
        out.indptr.push(out.indices.len());
        out.n_rows += 1;
    }
    Ok(out)
}

/// Prepends `first_col` columns that are set in every row (used for the
/// always-member global column).
pub(crate) fn with_leading_ones(m: CsrPattern, lead: u32) -> CsrPattern {
    let mut out = CsrPattern {
        n_rows: 0,
        n_cols: m.n_cols,
        indptr: vec![0],
        indices: Vec::with_capacity(m.nnz() + m.n_rows * lead as usize),
    };
    for row in m.rows() {
        out.indices.extend(0..lead);
        out.indices.extend_from_slice(row);
        out.indptr.push(out.indices.len());
        out.n_rows += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pattern_rejects_out_of_range_and_unsorted() {
        let mut p = CsrPattern::empty(3);
        p.push_row(&[0, 2]).unwrap();
        assert_eq!(
            p.push_row(&[3]),
            Err(Error::ItemOutOfRange {
                row: 1,
                item: 3,
                n_items: 3
            })
        );
        assert!(p.push_row(&[2, 1]).is_err());
        assert_eq!(p.n_rows(), 1);
        assert_eq!(p.row(0), &[0, 2]);
    }

    #[test]
    fn transpose_round_trips() {
        let mut m = CsrMatrix::empty(4);
        m.push_row(&[0, 3], &[0.5, 0.5]).unwrap();
        m.push_row(&[], &[]).unwrap();
        m.push_row(&[1, 2, 3], &[1.0, 2.0, 3.0]).unwrap();
        let t = m.transpose();
        assert_eq!(t.n_rows(), 4);
        assert_eq!(t.get(3, 2), 3.0);
        assert_eq!(t.get(0, 0), 0.5);
        assert_eq!(t.transpose(), m);
    }

    #[test]
    fn floor_product_thresholds_with_tolerance() {
        // one group of three items at 1/3 each
        let mut g = CsrMatrix::empty(3);
        let third = 1.0 / 3.0;
        g.push_row(&[0, 1, 2], &[third, third, third]).unwrap();
        let gt = g.transpose();
        let p = CsrPattern::from_rows(3, [&[0u32, 1, 2][..], &[0, 1][..]]).unwrap();
        let m = floor_product(&p, &gt, 1e-9, 0, 1).unwrap();
        assert_eq!(m.row(0), &[0]);
        assert!(m.row(1).is_empty());
    }

    #[test]
    fn slice_rows_keeps_content() {
        let p = CsrPattern::from_rows(5, [&[0u32][..], &[1, 4][..], &[][..], &[2][..]]).unwrap();
        let s = p.slice_rows(1, 3);
        assert_eq!(s.n_rows(), 2);
        assert_eq!(s.row(0), &[1, 4]);
        assert!(s.row(1).is_empty());
    }
}
