//! Compressed sparse storage (COO, CSR, CSC), Matrix Market IO, dense
//! verification oracles and random test-matrix generation.

mod coo;
mod csc;
mod csr;
mod dense;
mod mtx;
mod random;

pub use coo::CooMatrix;
pub use csc::CscMatrix;
pub use csr::CsrMatrix;
pub use dense::DenseMatrix;
pub use mtx::{load_matrix_market, parse_matrix_market, save_matrix_market, write_matrix_market};
pub use random::{make_spd, random_sparse};

/// `true` when `xs` is strictly increasing.
pub(crate) fn strictly_increasing(xs: &[usize]) -> bool {
    xs.windows(2).all(|w| w[0] < w[1])
}

/// Validates a compressed pointer/index/value triple and returns a
/// description of the first violation.
pub(crate) fn check_compressed(
    major: usize,
    minor: usize,
    ptr: &[usize],
    idx: &[usize],
    vals: &[f32],
) -> Result<(), String> {
    if ptr.len() != major + 1 {
        return Err(format!("pointer array has length {}, expected {}", ptr.len(), major + 1));
    }
    if ptr[0] != 0 {
        return Err(format!("pointer array starts at {}", ptr[0]));
    }
    if idx.len() != vals.len() {
        return Err(format!("{} indices but {} values", idx.len(), vals.len()));
    }
    if ptr[major] != idx.len() {
        return Err(format!("pointer array ends at {} but nnz is {}", ptr[major], idx.len()));
    }
    for (i, w) in ptr.windows(2).enumerate() {
        if w[0] > w[1] {
            return Err(format!("pointer array decreases at {i}"));
        }
        let lane = &idx[w[0]..w[1]];
        if !strictly_increasing(lane) {
            return Err(format!("indices of lane {i} are not strictly increasing"));
        }
        if let Some(&last) = lane.last() {
            if last >= minor {
                return Err(format!("index {last} in lane {i} exceeds dimension {minor}"));
            }
        }
    }
    Ok(())
}

/// Transposes a compressed structure (CSR -> CSC or back). Entries within
/// each output lane come out in ascending order because input lanes are
/// visited in order.
pub(crate) fn transpose_compressed(
    major: usize,
    minor: usize,
    ptr: &[usize],
    idx: &[usize],
    vals: &[f32],
) -> (Vec<usize>, Vec<usize>, Vec<f32>) {
    let mut out_ptr = vec![0usize; minor + 1];
    for &j in idx {
        out_ptr[j + 1] += 1;
    }
    for j in 0..minor {
        out_ptr[j + 1] += out_ptr[j];
    }
    let mut next = out_ptr[..minor].to_vec();
    let mut out_idx = vec![0usize; idx.len()];
    let mut out_vals = vec![0f32; vals.len()];
    for i in 0..major {
        for p in ptr[i]..ptr[i + 1] {
            let j = idx[p];
            let q = next[j];
            out_idx[q] = i;
            out_vals[q] = vals[p];
            next[j] += 1;
        }
    }
    (out_ptr, out_idx, out_vals)
}
