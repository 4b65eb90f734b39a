use anyhow::Result;
use reapkit_core::matrix::{make_spd, random_sparse, save_matrix_market};
use reapkit_core::Error;

use crate::args::GenArgs;
use crate::usage;

pub fn run(a: GenArgs) -> Result<()> {
    let cols = a.cols.unwrap_or(a.rows);
    let m = match random_sparse(a.rows, cols, a.density, a.seed) {
        Err(e @ (Error::InvalidDensity(_) | Error::ZeroDimension { .. })) => return Err(usage(e.to_string())),
        r => r?,
    };
    let m = if a.spd {
        make_spd(&m).map_err(|e| usage(e.to_string()))?
    } else {
        m
    };
    save_matrix_market(&a.out, &m)?;
    println!("wrote {} ({}x{}, nnz {}, density {:.6})", a.out.display(), m.rows(), m.cols(), m.nnz(), m.density()?);
    Ok(())
}
