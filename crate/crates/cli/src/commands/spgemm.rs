use std::time::Instant;

use anyhow::{bail, Result};
use reapkit_core::matrix::save_matrix_market;
use reapkit_core::spgemm::{reference_spgemm_f64, spgemm_with_stats};
use reapkit_core::{CsrMatrix, Error};
use serde::Serialize;
use serde_json::json;

use super::load_csr;
use crate::args::SpgemmArgs;
use crate::manifest::{write_json, RunManifest};
use crate::usage;

/// Dense verification is skipped above this size.
pub const DENSE_VERIFY_LIMIT: usize = 4096;

#[derive(Debug, Serialize)]
struct SpgemmReport {
    rows: usize,
    cols: usize,
    nnz: usize,
    density: f64,
    partials: u64,
    merge_adds: u64,
    flops: u64,
    explicit_zeros: u64,
    verified: Option<Verification>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Verification {
    pub reference_max_abs_diff: f64,
    pub dense_max_abs_diff: Option<f64>,
    pub failures: usize,
}

fn within(got: f64, want: f64) -> bool {
    let d = (got - want).abs();
    d <= 1e-6 || d <= 1e-5 * want.abs()
}

/// Compares `c` entry by entry with the f64 reference and, for small enough
/// shapes, the dense product.
pub fn verify_product(a: &CsrMatrix, b: &CsrMatrix, c: &CsrMatrix) -> Result<Verification> {
    let (r, wide) = reference_spgemm_f64(a, b)?;
    let mut failures = 0;
    let mut ref_max = 0.0f64;
    for i in 0..c.rows() {
        let (rc, rv) = (&r.col_indices()[r.row_ptr()[i]..r.row_ptr()[i + 1]], &wide[r.row_ptr()[i]..r.row_ptr()[i + 1]]);
        let (cc, cv) = c.row(i);
        // the pipeline pattern is a subset of the structural pattern
        let mut q = 0;
        for (&j, &v) in cc.iter().zip(cv) {
            while q < rc.len() && rc[q] < j {
                if !within(0.0, rv[q]) {
                    failures += 1;
                }
                q += 1;
            }
            if q == rc.len() || rc[q] != j {
                failures += 1;
                continue;
            }
            ref_max = ref_max.max((v as f64 - rv[q]).abs());
            if !within(v as f64, rv[q]) {
                failures += 1;
            }
            q += 1;
        }
        for &w in &rv[q..] {
            if !within(0.0, w) {
                failures += 1;
            }
        }
    }
    let dense = if a.rows().max(a.cols()).max(b.cols()) <= DENSE_VERIFY_LIMIT {
        let d = a.to_dense().matmul(&b.to_dense())?;
        let mut max = 0.0f64;
        for i in 0..c.rows() {
            let (cc, cv) = c.row(i);
            let mut q = 0;
            for j in 0..c.cols() {
                let got = if q < cc.len() && cc[q] == j {
                    q += 1;
                    cv[q - 1] as f64
                } else {
                    0.0
                };
                max = max.max((got - d[(i, j)]).abs());
                if !within(got, d[(i, j)]) {
                    failures += 1;
                }
            }
        }
        Some(max)
    } else {
        None
    };
    Ok(Verification { reference_max_abs_diff: ref_max, dense_max_abs_diff: dense, failures })
}

pub fn run(a: SpgemmArgs) -> Result<()> {
    let t0 = Instant::now();
    let ma = load_csr(&a.a)?;
    let mb = match &a.b {
        Some(p) => load_csr(p)?,
        None => ma.clone(),
    };
    let load = t0.elapsed().as_secs_f64();
    let t1 = Instant::now();
    let (c, stats) = match spgemm_with_stats(&ma, &mb, a.capacity) {
        Err(e @ Error::InvalidCapacity(_)) => return Err(usage(e.to_string())),
        r => r?,
    };
    let compute = t1.elapsed().as_secs_f64();
    let density = if c.rows() * c.cols() > 0 { c.nnz() as f64 / (c.rows() * c.cols()) as f64 } else { 0.0 };
    println!("C: {}x{}, nnz {}, density {:.6}", c.rows(), c.cols(), c.nnz(), density);
    println!("flops: {} ({} multiplies, {} merge adds)", stats.flops(), stats.partials, stats.merge_adds);
    if stats.explicit_zeros > 0 {
        println!("explicit zeros from cancellation: {}", stats.explicit_zeros);
    }
    let verified = if a.verify {
        let v = verify_product(&ma, &mb, &c)?;
        match v.dense_max_abs_diff {
            Some(d) => println!("verify: reference max diff {:.3e}, dense max diff {:.3e}", v.reference_max_abs_diff, d),
            None => println!("verify: reference max diff {:.3e} (dense check skipped above n = {DENSE_VERIFY_LIMIT})", v.reference_max_abs_diff),
        }
        Some(v)
    } else {
        None
    };
    if let Some(out) = &a.out {
        save_matrix_market(out, &c)?;
    }
    if let Some(path) = &a.json {
        let mut inputs = vec![a.a.as_path()];
        if let Some(b) = &a.b {
            inputs.push(b.as_path());
        }
        let mut m = RunManifest::new("spgemm", &inputs, json!({ "capacity": a.capacity, "verify": a.verify }));
        if a.timings {
            m.timing("load", load);
            m.timing("spgemm", compute);
        }
        let report = SpgemmReport {
            rows: c.rows(),
            cols: c.cols(),
            nnz: c.nnz(),
            density,
            partials: stats.partials,
            merge_adds: stats.merge_adds,
            flops: stats.flops(),
            explicit_zeros: stats.explicit_zeros,
            verified: verified.clone(),
        };
        write_json(path, &m, &report)?;
    }
    if a.timings {
        println!("timings: load {load:.6} s, spgemm {compute:.6} s");
    }
    if let Some(v) = verified {
        if v.failures > 0 {
            bail!("verification failed: {} entries outside tolerance", v.failures);
        }
        println!("verify: ok");
    }
    Ok(())
}
