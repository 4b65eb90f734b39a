use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

use super::{CooMatrix, CsrMatrix};

/// Uniformly random sparse matrix with exactly `round(density * rows * cols)`
/// stored entries (at least one when the matrix is non-empty). Values are
/// drawn from `[0.1, 1.0)`, so products never cancel to zero. The result
/// depends only on the arguments.
pub fn random_sparse(rows: usize, cols: usize, density: f64, seed: u64) -> Result<CsrMatrix> {
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::InvalidDensity(density));
    }
    let total = rows * cols;
    if total == 0 {
        return Ok(CsrMatrix::zeros(rows, cols));
    }
    let target = ((density * total as f64).round() as usize).clamp(1, total);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut positions = index::sample(&mut rng, total, target).into_vec();
    positions.sort_unstable();

    let mut row_ptr = vec![0usize; rows + 1];
    let mut col_idx = Vec::with_capacity(target);
    let mut values = Vec::with_capacity(target);
    for p in positions {
        row_ptr[p / cols + 1] += 1;
        col_idx.push(p % cols);
        values.push(rng.gen_range(0.1f32..1.0));
    }
    for r in 0..rows {
        row_ptr[r + 1] += row_ptr[r];
    }
    Ok(CsrMatrix::from_parts_unchecked(rows, cols, row_ptr, col_idx, values))
}

/// Symmetrizes `m` as `(m + mᵀ) / 2`, adds the full diagonal, and raises
/// each diagonal entry until the row is strictly diagonally dominant by a
/// margin of one. The result is symmetric positive definite; the pattern
/// is `pattern(m) ∪ pattern(mᵀ) ∪ diag`.
pub fn make_spd(m: &CsrMatrix) -> Result<CsrMatrix> {
    if m.rows() != m.cols() {
        return Err(Error::NotSquare { rows: m.rows(), cols: m.cols() });
    }
    let n = m.rows();
    let mut coo = CooMatrix::new(n, n);
    for (i, j, v) in m.iter() {
        coo.push(i, j, 0.5 * v)?;
        coo.push(j, i, 0.5 * v)?;
    }
    for i in 0..n {
        coo.push(i, i, 0.0)?;
    }
    let sym = coo.to_csr();

    let mut values = sym.values().to_vec();
    for i in 0..n {
        let (cols, vals) = sym.row(i);
        let mut off = 0f64;
        let mut diag_pos = None;
        for (p, (&j, &v)) in cols.iter().zip(vals).enumerate() {
            if j == i {
                diag_pos = Some(p);
            } else {
                off += (v as f64).abs();
            }
        }
        let pos = sym.row_ptr()[i] + diag_pos.expect("diagonal was inserted");
        let needed = off + 1.0;
        if (values[pos] as f64) < needed {
            values[pos] = needed as f32;
            // rounding down could undercut the margin
            if (values[pos] as f64) < needed {
                values[pos] = f32::from_bits(values[pos].to_bits() + 1);
            }
        }
    }
    Ok(CsrMatrix::from_parts_unchecked(
        n,
        n,
        sym.row_ptr().to_vec(),
        sym.col_indices().to_vec(),
        values,
    ))
}
