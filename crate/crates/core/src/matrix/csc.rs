use crate::error::{Error, Result};

use super::{check_compressed, transpose_compressed, CsrMatrix, DenseMatrix};

/// Compressed sparse column storage; the column-major dual of
/// [`CsrMatrix`] with strictly increasing row indices per column.
#[derive(Debug, Clone, PartialEq)]
pub struct CscMatrix {
    rows: usize,
    cols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f32>,
}

impl CscMatrix {
    pub fn from_parts(
        rows: usize,
        cols: usize,
        col_ptr: Vec<usize>,
        row_idx: Vec<usize>,
        values: Vec<f32>,
    ) -> Result<Self> {
        check_compressed(cols, rows, &col_ptr, &row_idx, &values).map_err(Error::NotCanonical)?;
        Ok(Self { rows, cols, col_ptr, row_idx, values })
    }

    pub(crate) fn from_parts_unchecked(
        rows: usize,
        cols: usize,
        col_ptr: Vec<usize>,
        row_idx: Vec<usize>,
        values: Vec<f32>,
    ) -> Self {
        debug_assert!(check_compressed(cols, rows, &col_ptr, &row_idx, &values).is_ok());
        Self { rows, cols, col_ptr, row_idx, values }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn col_ptr(&self) -> &[usize] {
        &self.col_ptr
    }

    pub fn row_indices(&self) -> &[usize] {
        &self.row_idx
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    /// Row indices and values of column `j`.
    pub fn col(&self, j: usize) -> (&[usize], &[f32]) {
        let (s, e) = (self.col_ptr[j], self.col_ptr[j + 1]);
        (&self.row_idx[s..e], &self.values[s..e])
    }

    /// Entries of column `j` on or below the diagonal.
    pub fn lower_col(&self, j: usize) -> (&[usize], &[f32]) {
        let (rows, vals) = self.col(j);
        let start = rows.partition_point(|&r| r < j);
        (&rows[start..], &vals[start..])
    }

    /// Iterates stored entries in column-major order as `(row, col, value)`.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f32)> + '_ {
        (0..self.cols).flat_map(move |j| {
            let (rows, vals) = self.col(j);
            rows.iter().zip(vals).map(move |(&i, &v)| (i, j, v))
        })
    }

    pub fn density(&self) -> Result<f64> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::ZeroDimension { rows: self.rows, cols: self.cols });
        }
        Ok(self.nnz() as f64 / (self.rows as f64 * self.cols as f64))
    }

    pub fn to_csr(&self) -> CsrMatrix {
        let (ptr, idx, vals) =
            transpose_compressed(self.cols, self.rows, &self.col_ptr, &self.row_idx, &self.values);
        CsrMatrix::from_parts_unchecked(self.rows, self.cols, ptr, idx, vals)
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.rows, self.cols);
        for (i, j, v) in self.iter() {
            d[(i, j)] = v as f64;
        }
        d
    }

    /// `true` when the stored pattern equals its transpose.
    pub fn has_symmetric_pattern(&self) -> bool {
        self.first_asymmetric_entry().is_none()
    }

    pub(crate) fn first_asymmetric_entry(&self) -> Option<(usize, usize)> {
        if self.rows != self.cols {
            return Some((0, 0));
        }
        // the CSR of the same matrix lists column j of the transpose
        let t = self.to_csr();
        for j in 0..self.cols {
            let (rows, _) = self.col(j);
            let (trows, _) = t.row(j);
            if rows != trows {
                let missing = rows
                    .iter()
                    .find(|r| trows.binary_search(r).is_err())
                    .map(|&r| (r, j))
                    .or_else(|| {
                        trows.iter().find(|r| rows.binary_search(r).is_err()).map(|&c| (j, c))
                    })
                    .unwrap_or((j, j));
                return Some(missing);
            }
        }
        None
    }
}
