use crate::error::{Error, Result};

use super::{check_compressed, transpose_compressed, CooMatrix, CscMatrix, DenseMatrix};

/// Compressed sparse row storage in canonical form: column indices within
/// each row are strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f32>,
}

impl CsrMatrix {
    /// Builds a CSR matrix from raw arrays, rejecting anything that is not
    /// in canonical form.
    pub fn from_parts(
        rows: usize,
        cols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f32>,
    ) -> Result<Self> {
        check_compressed(rows, cols, &row_ptr, &col_idx, &values).map_err(Error::NotCanonical)?;
        Ok(Self { rows, cols, row_ptr, col_idx, values })
    }

    pub(crate) fn from_parts_unchecked(
        rows: usize,
        cols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f32>,
    ) -> Self {
        debug_assert!(check_compressed(rows, cols, &row_ptr, &col_idx, &values).is_ok());
        Self { rows, cols, row_ptr, col_idx, values }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_parts_unchecked(rows, cols, vec![0; rows + 1], Vec::new(), Vec::new())
    }

    pub fn identity(n: usize) -> Self {
        Self::from_parts_unchecked(n, n, (0..=n).collect(), (0..n).collect(), vec![1.0; n])
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

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f32]) {
        let (s, e) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.col_idx[s..e], &self.values[s..e])
    }

    pub fn row_nnz(&self, i: usize) -> usize {
        self.row_ptr[i + 1] - self.row_ptr[i]
    }

    /// Value at `(i, j)` if it is stored.
    pub fn get(&self, i: usize, j: usize) -> Option<f32> {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).ok().map(|p| vals[p])
    }

    /// Iterates stored entries in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f32)> + '_ {
        (0..self.rows).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&j, &v)| (i, j, v))
        })
    }

    /// Fraction of stored entries: nnz / (rows * cols).
    pub fn density(&self) -> Result<f64> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::ZeroDimension { rows: self.rows, cols: self.cols });
        }
        Ok(self.nnz() as f64 / (self.rows as f64 * self.cols as f64))
    }

    pub fn to_csc(&self) -> CscMatrix {
        let (ptr, idx, vals) =
            transpose_compressed(self.rows, self.cols, &self.row_ptr, &self.col_idx, &self.values);
        CscMatrix::from_parts_unchecked(self.rows, self.cols, ptr, idx, vals)
    }

    pub fn to_coo(&self) -> CooMatrix {
        CooMatrix::from_entries(self.rows, self.cols, self.iter()).expect("canonical CSR is in bounds")
    }

    pub fn transpose(&self) -> CsrMatrix {
        let (ptr, idx, vals) =
            transpose_compressed(self.rows, self.cols, &self.row_ptr, &self.col_idx, &self.values);
        CsrMatrix::from_parts_unchecked(self.cols, self.rows, ptr, idx, vals)
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.rows, self.cols);
        for (i, j, v) in self.iter() {
            d[(i, j)] = v as f64;
        }
        d
    }

    /// Same structure, values compared bit for bit.
    pub fn bitwise_eq(&self, other: &CsrMatrix) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self.row_ptr == other.row_ptr
            && self.col_idx == other.col_idx
            && self.values.iter().zip(&other.values).all(|(a, b)| a.to_bits() == b.to_bits())
    }
}
