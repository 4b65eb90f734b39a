use crate::error::{Error, Result};

use super::CsrMatrix;

/// Coordinate-list storage. Entries may arrive in any order and may
/// contain duplicates; [`CooMatrix::to_csr`] canonicalizes.
#[derive(Debug, Clone, PartialEq)]
pub struct CooMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<(usize, usize, f32)>,
}

impl CooMatrix {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self { rows, cols, entries: Vec::new() }
    }

    pub fn from_entries(
        rows: usize,
        cols: usize,
        entries: impl IntoIterator<Item = (usize, usize, f32)>,
    ) -> Result<Self> {
        let mut m = Self::new(rows, cols);
        for (r, c, v) in entries {
            m.push(r, c, v)?;
        }
        Ok(m)
    }

    pub fn push(&mut self, row: usize, col: usize, value: f32) -> Result<()> {
        if row >= self.rows || col >= self.cols {
            return Err(Error::OutOfBounds { row, col, rows: self.rows, cols: self.cols });
        }
        self.entries.push((row, col, value));
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[(usize, usize, f32)] {
        &self.entries
    }

    /// Number of stored entries, duplicates included.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Converts to canonical CSR. Duplicate coordinates are summed in the
    /// order they were pushed; explicit zeros are kept.
    pub fn to_csr(&self) -> CsrMatrix {
        let mut row_ptr = vec![0usize; self.rows + 1];
        for &(r, _, _) in &self.entries {
            row_ptr[r + 1] += 1;
        }
        for r in 0..self.rows {
            row_ptr[r + 1] += row_ptr[r];
        }
        // bucket by row keeping arrival order, then stable-sort each row
        let mut next = row_ptr[..self.rows].to_vec();
        let mut bucket = vec![(0usize, 0f32); self.entries.len()];
        for &(r, c, v) in &self.entries {
            bucket[next[r]] = (c, v);
            next[r] += 1;
        }

        let mut out_ptr = Vec::with_capacity(self.rows + 1);
        let mut col_idx = Vec::with_capacity(bucket.len());
        let mut vals = Vec::with_capacity(bucket.len());
        out_ptr.push(0);
        for r in 0..self.rows {
            let row = &mut bucket[row_ptr[r]..row_ptr[r + 1]];
            row.sort_by_key(|&(c, _)| c);
            for &(c, v) in row.iter() {
                if col_idx.len() > out_ptr[r] && *col_idx.last().unwrap() == c {
                    *vals.last_mut().unwrap() += v;
                } else {
                    col_idx.push(c);
                    vals.push(v);
                }
            }
            out_ptr.push(col_idx.len());
        }
        CsrMatrix::from_parts_unchecked(self.rows, self.cols, out_ptr, col_idx, vals)
    }
}
