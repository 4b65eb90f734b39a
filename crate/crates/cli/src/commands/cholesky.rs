use std::time::Instant;

use anyhow::{bail, Result};
use reapkit_core::cholesky::{build_etree, factorize, symbolic_pattern, verify_factor};
use reapkit_core::matrix::{make_spd, save_matrix_market};
use reapkit_core::Error;
use serde::Serialize;
use serde_json::json;

use super::load_csr;
use crate::args::CholeskyArgs;
use crate::manifest::{write_json, RunManifest};

/// Factors printed in full up to this size.
const PRINT_LIMIT: usize = 16;

#[derive(Serialize)]
struct CholeskyReport {
    n: usize,
    nnz_a: usize,
    nnz_l: usize,
    etree_roots: usize,
    residual_max_abs: Option<f64>,
    residual_frobenius: Option<f64>,
    residual_relative: Option<f64>,
}

pub fn run(a: CholeskyArgs) -> Result<()> {
    let m = load_csr(&a.a)?;
    let m = if a.make_spd { make_spd(&m)? } else { m };
    let csc = m.to_csc();
    let t = Instant::now();
    let tree = build_etree(&csc)?;
    let etree_s = t.elapsed().as_secs_f64();
    let t = Instant::now();
    let pattern = symbolic_pattern(&csc, &tree)?;
    let symbolic_s = t.elapsed().as_secs_f64();
    let t = Instant::now();
    let l = match factorize(&csc, &pattern) {
        Err(Error::NotPositiveDefinite { column, pivot }) => {
            bail!("matrix is not positive definite: pivot {pivot} at column {column}")
        }
        r => r?,
    };
    let numeric_s = t.elapsed().as_secs_f64();
    let n = csc.cols();
    println!("n: {n}, nnz(A): {}, nnz(L): {}", csc.nnz(), l.nnz());
    if n <= PRINT_LIMIT {
        println!("L:");
        for r in 0..n {
            let (cols, vals) = l.row(r);
            let entries: Vec<String> = cols.iter().zip(vals).map(|(c, v)| format!("({r},{c}) {v}")).collect();
            println!("  {}", entries.join("  "));
        }
    }
    if a.timings {
        println!("timings: etree {etree_s:.6} s, symbolic {symbolic_s:.6} s, numeric {numeric_s:.6} s");
    }
    let residual = if a.verify { Some(verify_factor(&csc, &l)?) } else { None };
    if let Some(out) = &a.out {
        save_matrix_market(out, &l.to_csr())?;
    }
    if let Some(path) = &a.json {
        let mut man = RunManifest::new("cholesky", &[a.a.as_path()], json!({ "make_spd": a.make_spd, "verify": a.verify }));
        if a.timings {
            man.timing("etree", etree_s);
            man.timing("symbolic", symbolic_s);
            man.timing("numeric", numeric_s);
        }
        let report = CholeskyReport {
            n,
            nnz_a: csc.nnz(),
            nnz_l: l.nnz(),
            etree_roots: tree.roots().count(),
            residual_max_abs: residual.map(|r| r.max_abs),
            residual_frobenius: residual.map(|r| r.frobenius),
            residual_relative: residual.map(|r| r.relative()),
        };
        write_json(path, &man, &report)?;
    }
    if let Some(r) = residual {
        println!("residual: max {:.3e}, frobenius {:.3e}, relative {:.3e}", r.max_abs, r.frobenius, r.relative());
        if r.max_abs > 1e-4 * r.max_abs_a {
            bail!("verification failed: max |L*L^T - A| = {:e} exceeds 1e-4 * max|A|", r.max_abs);
        }
        println!("verify: ok");
    }
    Ok(())
}
