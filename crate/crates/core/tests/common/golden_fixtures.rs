//! Streams whose serialized bytes are pinned under `tests/golden`.

use std::path::PathBuf;

use reapkit_core::cholesky::{build_etree, symbolic_pattern};
use reapkit_core::matrix::{make_spd, random_sparse, CooMatrix};
use reapkit_core::rir::{build_cholesky_schedule, compress_csc, compress_csr, serialize};
use reapkit_core::CsrMatrix;

pub fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/golden")
}

pub fn fixtures() -> Vec<(&'static str, Vec<u8>)> {
    let id = CsrMatrix::identity(3);
    let small = CooMatrix::from_entries(
        4,
        5,
        [(0, 0, 1.5), (0, 3, -2.0), (1, 1, 0.25), (2, 0, 3.0), (2, 2, 4.0), (2, 4, 5.0), (3, 4, -0.5)],
    )
    .unwrap()
    .to_csr();
    let spd = make_spd(&random_sparse(12, 12, 0.15, 7).unwrap()).unwrap().to_csc();
    let t = build_etree(&spd).unwrap();
    let p = symbolic_pattern(&spd, &t).unwrap();
    vec![
        ("identity3_csr_c32.rir", serialize(&compress_csr(&id, 32).unwrap())),
        ("small_csr_c2.rir", serialize(&compress_csr(&small, 2).unwrap())),
        ("small_csc_c1.rir", serialize(&compress_csc(&small.to_csc(), 1).unwrap())),
        ("spd12_chol_c4.rir", serialize(&build_cholesky_schedule(&spd, &p, 4).unwrap())),
    ]
}
