//! One pass/fail line per acceptance criterion. Runs as a plain binary so
//! each criterion reports even when an earlier one fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use reapkit_core::cholesky::{build_etree, factorize, symbolic_pattern, verify_factor, Factorizer};
use reapkit_core::matrix::{make_spd, random_sparse, CooMatrix};
use reapkit_core::rir::{
    build_cholesky_schedule, build_spgemm_schedule, compress_csc, compress_csr, decompress_to_csc,
    decompress_to_csr, deserialize, serialize, RirRecord, RirStream,
};
use reapkit_core::spgemm::{spgemm, spgemm_with_stats};
use reapkit_core::{CscMatrix, CsrMatrix};
use reapkit_sim::{
    model_overlap, preset, simulate_cholesky, simulate_spgemm, SimConfig, SimReport, PRESET_NAMES,
};

#[path = "../../core/tests/common/golden_fixtures.rs"]
mod golden_fixtures;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e2s<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// `(n, density)` pairs for the SpGEMM fixtures, seeded by position.
const SPGEMM_FIXTURES: [(usize, f64); 10] = [
    (2000, 1e-4),
    (2000, 5e-4),
    (1500, 1e-3),
    (1000, 2e-3),
    (1000, 5e-3),
    (800, 0.01),
    (500, 0.02),
    (400, 0.05),
    (300, 0.1),
    (200, 0.2),
];

fn spgemm_fixtures() -> Vec<(String, CsrMatrix)> {
    SPGEMM_FIXTURES
        .iter()
        .enumerate()
        .map(|(i, &(n, d))| (format!("n{n}_d{d}"), random_sparse(n, n, d, 100 + i as u64).unwrap()))
        .collect()
}

fn symmetric(n: usize, entries: impl IntoIterator<Item = (usize, usize, f32)>) -> CsrMatrix {
    let mut coo = CooMatrix::new(n, n);
    for (i, j, v) in entries {
        coo.push(i, j, v).unwrap();
        if i != j {
            coo.push(j, i, v).unwrap();
        }
    }
    coo.to_csr()
}

fn spd_fixtures() -> Vec<(String, CscMatrix)> {
    let mut out = Vec::new();
    for (i, &(n, d)) in [(1000, 0.002), (800, 0.005), (500, 0.01), (300, 0.03), (100, 0.1)].iter().enumerate() {
        let m = make_spd(&random_sparse(n, n, d, 200 + i as u64).unwrap()).unwrap();
        out.push((format!("spd_n{n}_d{d}"), m.to_csc()));
    }
    let n = 1000;
    let tri = symmetric(n, (0..n).map(|i| (i, i, 4.0)).chain((1..n).map(|i| (i, i - 1, -1.0))));
    out.push(("tridiagonal_n1000".into(), tri.to_csc()));
    let n = 600;
    let arrow = symmetric(
        n,
        (0..n).map(|i| (i, i, if i == n - 1 { n as f32 } else { 2.0 })).chain((0..n - 1).map(|i| (n - 1, i, 0.5))),
    );
    out.push(("arrowhead_n600".into(), arrow.to_csc()));
    let n = 700;
    let band = symmetric(
        n,
        (0..n).flat_map(|i| {
            (i.saturating_sub(5)..=i).map(move |j| (i, j, if i == j { 12.0 } else { -1.0 / (1 + i - j) as f32 }))
        }),
    );
    out.push(("banded5_n700".into(), band.to_csc()));
    out
}

fn within(got: f64, want: f64) -> bool {
    let err = (got - want).abs();
    err <= 1e-6 || err <= 1e-5 * want.abs()
}

fn criterion_1() -> Outcome {
    let fixtures = spgemm_fixtures();
    let mut entries = 0usize;
    let mut worst_abs = 0.0f64;
    for (name, a) in &fixtures {
        let c = spgemm(a, a, 32).map_err(e2s)?;
        let dense = a.to_dense();
        let want = dense.matmul(&dense).map_err(e2s)?;
        let got = c.to_dense();
        for (g, w) in got.data().iter().zip(want.data()) {
            worst_abs = worst_abs.max((g - w).abs());
            ensure(within(*g, *w), || format!("{name}: got {g}, oracle {w}"))?;
        }
        entries += got.data().len();
    }
    Ok(format!(
        "{} fixtures, {entries} entries within abs 1e-6 or rel 1e-5 (worst abs error {worst_abs:.2e})",
        fixtures.len()
    ))
}

fn criterion_2() -> Outcome {
    let fixtures = spd_fixtures();
    let mut worst = 0.0f64;
    for (name, a) in &fixtures {
        ensure(a.rows() <= 1000, || format!("{name} is larger than 1000"))?;
        let t = build_etree(a).map_err(e2s)?;
        let p = symbolic_pattern(a, &t).map_err(e2s)?;
        let l = factorize(a, &p).map_err(e2s)?;
        let r = verify_factor(a, &l).map_err(e2s)?;
        worst = worst.max(r.relative());
        ensure(r.max_abs <= 1e-4 * r.max_abs_a, || {
            format!("{name}: residual {} exceeds 1e-4 * {}", r.max_abs, r.max_abs_a)
        })?;
        let dense_l = a.to_csr().to_dense().cholesky().map_err(e2s)?;
        for i in 0..dense_l.rows() {
            for (j, &v) in dense_l.row(i)[..=i].iter().enumerate() {
                if v.abs() > 1e-12 {
                    ensure(p.col(j).binary_search(&i).is_ok(), || {
                        format!("{name}: dense factor entry ({i},{j}) = {v} outside the symbolic pattern")
                    })?;
                }
            }
        }
    }
    Ok(format!("{} SPD fixtures, worst max|LLt - A| / max|A| = {worst:.2e}, patterns cover dense factors", fixtures.len()))
}

fn arb_matrix() -> impl Strategy<Value = CsrMatrix> {
    let shape = prop_oneof![
        4 => (1usize..48, 1usize..48, 0usize..200),
        1 => (1usize..4, 1000usize..2100, 0usize..2500),
    ];
    shape.prop_flat_map(|(r, c, max)| {
        prop::collection::vec((0..r, 0..c, -100.0f32..100.0), 0..=max)
            .prop_map(move |e| CooMatrix::from_entries(r, c, e).unwrap().to_csr())
    })
}

fn criterion_3() -> Outcome {
    let config = Config { cases: 1000, failure_persistence: None, ..Config::default() };
    let mut runner = TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    runner
        .run(&arb_matrix(), |m| {
            for cap in [1usize, 2, 32, 1024] {
                let s = compress_csr(&m, cap).unwrap();
                let back = deserialize(&serialize(&s)).unwrap();
                prop_assert!(back.bitwise_eq(&s));
                prop_assert!(decompress_to_csr(&back).unwrap().bitwise_eq(&m));
                let s = compress_csc(&m.to_csc(), cap).unwrap();
                let back = deserialize(&serialize(&s)).unwrap();
                prop_assert!(decompress_to_csc(&back).unwrap().to_csr().bitwise_eq(&m));
            }
            Ok(())
        })
        .map_err(e2s)?;
    let fixtures = golden_fixtures::fixtures();
    for (name, bytes) in &fixtures {
        let pinned = std::fs::read(golden_fixtures::golden_dir().join(name)).map_err(|e| format!("{name}: {e}"))?;
        ensure(&pinned == bytes, || format!("{name}: serialized bytes differ from the golden file"))?;
        ensure(serialize(&deserialize(bytes).map_err(e2s)?) == *bytes, || format!("{name}: re-serialization differs"))?;
    }
    Ok(format!("1000 generated matrices x capacities {{1,2,32,1024}} x CSR/CSC round-trip; {} golden files match", fixtures.len()))
}

fn check_capacity(s: &RirStream, cap: usize) -> Result<(), String> {
    for r in &s.records {
        let len = match r {
            RirRecord::Data(b) => b.len(),
            RirRecord::Schedule(m) => m.triples.len(),
        };
        ensure(len <= cap && len > 0, || format!("bundle with {len} entries at capacity {cap}"))?;
    }
    Ok(())
}

fn criterion_4() -> Outcome {
    let mut split_rows = 0usize;
    let mut bundles = 0usize;
    let mut mats: Vec<CsrMatrix> = spgemm_fixtures().into_iter().map(|(_, m)| m).collect();
    mats.push(random_sparse(8, 1000, 0.3, 9).unwrap());
    mats.push(CsrMatrix::identity(5));
    for m in &mats {
        let s = compress_csr(m, 32).map_err(e2s)?;
        check_capacity(&s, 32)?;
        let mut per_row = vec![0usize; m.rows()];
        for b in s.data_bundles() {
            per_row[b.shared as usize] += 1;
            bundles += 1;
        }
        for (i, &count) in per_row.iter().enumerate() {
            let nnz = m.row_nnz(i);
            ensure(count == nnz.div_ceil(32), || format!("row {i} with nnz {nnz} has {count} bundles"))?;
            if nnz > 32 {
                split_rows += 1;
            }
        }
        for cap in [1usize, 2, 7, 1024] {
            check_capacity(&compress_csc(&m.to_csc(), cap).map_err(e2s)?, cap)?;
        }
    }
    for (_, a) in spd_fixtures() {
        let p = symbolic_pattern(&a, &build_etree(&a).map_err(e2s)?).map_err(e2s)?;
        for cap in [1usize, 4, 32] {
            check_capacity(&build_cholesky_schedule(&a, &p, cap).map_err(e2s)?, cap)?;
        }
    }
    ensure(split_rows > 0, || "no fixture row exceeded 32 entries".into())?;
    Ok(format!("{bundles} bundles at capacity 32 within bounds, {split_rows} rows over 32 split into ceil(nnz/32)"))
}

fn check_budget(r: &SimReport) -> Result<(), String> {
    ensure(
        r.peak_read_bytes_per_cycle <= r.read_budget_bytes_per_cycle
            && r.peak_write_bytes_per_cycle <= r.write_budget_bytes_per_cycle,
        || {
            format!(
                "peaks {}/{} exceed budgets {}/{}",
                r.peak_read_bytes_per_cycle,
                r.peak_write_bytes_per_cycle,
                r.read_budget_bytes_per_cycle,
                r.write_budget_bytes_per_cycle
            )
        },
    )
}

fn sim_spgemm(a: &CsrMatrix, cfg: &SimConfig) -> Result<SimReport, String> {
    let s = build_spgemm_schedule(a, a, cfg.pipelines, cfg.bundle_capacity).map_err(e2s)?;
    let r = simulate_spgemm(&s, cfg).map_err(e2s)?.report;
    check_budget(&r)?;
    Ok(r)
}

fn sim_cholesky(a: &CscMatrix, cfg: &SimConfig) -> Result<SimReport, String> {
    let p = symbolic_pattern(a, &build_etree(a).map_err(e2s)?).map_err(e2s)?;
    let s = build_cholesky_schedule(a, &p, cfg.bundle_capacity).map_err(e2s)?;
    let r = simulate_cholesky(&s, a, &p, cfg).map_err(e2s)?.report;
    check_budget(&r)?;
    Ok(r)
}

fn criterion_5() -> Outcome {
    let mut runs = 0;
    for (name, a) in spgemm_fixtures() {
        let (_, stats) = spgemm_with_stats(&a, &a, 32).map_err(e2s)?;
        for p in ["reap32-spgemm", "reap64-spgemm", "reap128-spgemm"] {
            let mut cfg = preset(p).map_err(e2s)?;
            for bw in [None, Some(1.0)] {
                if let Some(bw) = bw {
                    cfg.read_bw_gbps = bw;
                    cfg.write_bw_gbps = bw;
                }
                let r = sim_spgemm(&a, &cfg)?;
                ensure(r.multiplies == stats.partials, || {
                    format!("{name} {p}: {} multiplies, engine {} partials", r.multiplies, stats.partials)
                })?;
                runs += 1;
            }
        }
    }
    for (name, a) in spd_fixtures() {
        let pat = symbolic_pattern(&a, &build_etree(&a).map_err(e2s)?).map_err(e2s)?;
        let mut f = Factorizer::new(&a, &pat).map_err(e2s)?;
        let mut matched = 0u64;
        while !f.done() {
            matched += f.step().map_err(e2s)?.dots.iter().map(|d| d.matched as u64).sum::<u64>();
        }
        for p in ["reap32-chol", "reap64-chol"] {
            let r = sim_cholesky(&a, &preset(p).map_err(e2s)?)?;
            ensure(r.multiplies - r.redundant_multiplies == matched, || {
                format!("{name} {p}: {} - {} multiplies, engine {matched}", r.multiplies, r.redundant_multiplies)
            })?;
            runs += 1;
        }
    }
    Ok(format!("{runs} simulations: peak bytes/cycle within budget, multiplies equal engine partial products"))
}

fn non_increasing(v: &[u64]) -> bool {
    v.windows(2).all(|w| w[1] <= w[0])
}

fn criterion_6() -> Outcome {
    let pipelines = [1usize, 2, 4, 8, 16, 32, 64, 128];
    let bandwidths = [1.0, 2.0, 4.0, 8.0, 14.0, 32.0, 73.0, 147.0, 300.0];
    let fixtures = spgemm_fixtures();
    for (name, a) in &fixtures {
        let mut cycles = Vec::new();
        for &p in &pipelines {
            cycles.push(sim_spgemm(a, &SimConfig { pipelines: p, ..SimConfig::default() })?.total_cycles);
        }
        ensure(non_increasing(&cycles), || format!("(a) {name}: cycles over pipelines {cycles:?}"))?;
        let mut cycles = Vec::new();
        for &bw in &bandwidths {
            let cfg = SimConfig { read_bw_gbps: bw, write_bw_gbps: bw, ..SimConfig::default() };
            cycles.push(sim_spgemm(a, &cfg)?.total_cycles);
        }
        ensure(non_increasing(&cycles), || format!("(a) {name}: cycles over bandwidth {cycles:?}"))?;
    }

    let mut chol = spd_fixtures();
    chol.retain(|(_, a)| a.rows() <= 700);
    for (name, a) in &chol {
        let mut idle = Vec::new();
        for &p in &pipelines {
            idle.push(sim_cholesky(a, &SimConfig { pipelines: p, ..SimConfig::default() })?.pipeline_idle_fraction);
        }
        ensure(idle.windows(2).all(|w| w[1] >= w[0]), || format!("(b) {name}: idle fractions {idle:?}"))?;
    }
    let n = 64;
    let diag = CooMatrix::from_entries(n, n, (0..n).map(|i| (i, i, 1.0 + i as f32))).map_err(e2s)?.to_csr().to_csc();
    for &p in &pipelines {
        let f = sim_cholesky(&diag, &SimConfig { pipelines: p, ..SimConfig::default() })?.pipeline_idle_fraction;
        ensure(f == (p - 1) as f64 / p as f64, || format!("(b) diagonal at P={p}: idle fraction {f}"))?;
    }

    let densities = [0.0005, 0.001, 0.002, 0.005, 0.01, 0.02];
    let mut speedups = Vec::new();
    for &d in &densities {
        let a = random_sparse(1000, 1000, d, 1).map_err(e2s)?;
        speedups.push(sim_spgemm(&a, &SimConfig::default())?.speedup_vs_serial);
    }
    ensure(speedups.windows(2).all(|w| w[1] < w[0]), || format!("(c) speedups {speedups:?}"))?;
    let shown: Vec<String> = speedups.iter().map(|s| format!("{s:.2}")).collect();
    Ok(format!(
        "(a) {} fixtures monotone over P 1..128 and 9 bandwidths; (b) {} SPD fixtures monotone, diagonal exact; (c) speedup over serial [{}] for density {:?}",
        fixtures.len(),
        chol.len(),
        shown.join(", "),
        densities
    ))
}

fn criterion_7() -> Outcome {
    let single = model_overlap(&[0.75], &[2.5]).map_err(e2s)?;
    ensure(single == 0.75 + 2.5, || format!("single group gave {single}"))?;
    let fpga = [0.5, 1.25, 2.0, 0.125];
    let zero = model_overlap(&[0.0; 4], &fpga).map_err(e2s)?;
    ensure(zero == fpga.iter().sum::<f64>(), || format!("zero prep gave {zero}"))?;
    let prep = [0.25, 0.5, 0.125, 1.0];
    let fpga = [2.0, 1.5, 3.0, 4.0];
    let dom = model_overlap(&prep, &fpga).map_err(e2s)?;
    ensure(dom == prep[0] + fpga.iter().sum::<f64>(), || format!("fpga-dominant gave {dom}"))?;
    Ok("single group = prep + fpga; zero prep = sum fpga; fpga-dominant = prep[0] + sum fpga".into())
}

fn criterion_8() -> Outcome {
    // name, pipelines, MHz, read GB/s, write GB/s, multipliers per PE
    let want: [(&str, usize, f64, f64, f64, usize); 5] = [
        ("reap32-spgemm", 32, 250.0, 14.0, 14.0, 1),
        ("reap64-spgemm", 64, 250.0, 147.0, 73.0, 1),
        ("reap128-spgemm", 128, 220.0, 147.0, 73.0, 1),
        ("reap32-chol", 32, 250.0, 14.0, 14.0, 8),
        ("reap64-chol", 64, 238.0, 147.0, 73.0, 16),
    ];
    ensure(PRESET_NAMES.len() == want.len(), || format!("{} presets", PRESET_NAMES.len()))?;
    for (name, p, f, r, w, m) in want {
        ensure(PRESET_NAMES.contains(&name), || format!("{name} missing from the preset list"))?;
        let c = preset(name).map_err(e2s)?;
        let got = (c.pipelines, c.freq_mhz, c.read_bw_gbps, c.write_bw_gbps, c.multipliers_per_pe);
        ensure(got == (p, f, r, w, m), || format!("{name}: {got:?}"))?;
        ensure(c.bundle_capacity == 32, || format!("{name}: capacity {}", c.bundle_capacity))?;
        c.validate().map_err(e2s)?;
    }
    Ok("5 presets match pipelines, clock, bandwidth, multipliers and capacity 32".into())
}

fn run_twice(dir: &Path, args: &[String], outputs: &[&str]) -> Result<(), String> {
    let mut first = Vec::new();
    for round in 0..2 {
        let o = Command::new(env!("CARGO_BIN_EXE_reapkit")).args(args).output().map_err(e2s)?;
        ensure(o.status.success(), || format!("{args:?}: {}", String::from_utf8_lossy(&o.stderr)))?;
        let mut bytes = o.stdout;
        for out in outputs {
            bytes.extend(std::fs::read(dir.join(out)).map_err(|e| format!("{out}: {e}"))?);
        }
        if round == 0 {
            first = bytes;
        } else {
            ensure(first == bytes, || format!("{args:?} differs between runs"))?;
        }
    }
    Ok(())
}

fn criterion_9() -> Outcome {
    let tmp = tempfile::tempdir().map_err(e2s)?;
    let d = tmp.path();
    let f = |name: &str| d.join(name).to_str().unwrap().to_string();
    let cmds: Vec<(Vec<String>, Vec<&str>)> = vec![
        (vec!["gen".into(), "--rows".into(), "400".into(), "--density".into(), "0.01".into(), "--seed".into(), "3".into(), f("a.mtx")], vec!["a.mtx"]),
        (vec!["gen".into(), "--rows".into(), "300".into(), "--density".into(), "0.01".into(), "--spd".into(), f("s.mtx")], vec!["s.mtx"]),
        (vec!["convert".into(), f("a.mtx"), f("a.rir"), "--capacity".into(), "4".into()], vec!["a.rir"]),
        (vec!["spgemm".into(), f("a.mtx"), "--verify".into(), "--json".into(), f("sp.json"), "--out".into(), f("c.mtx")], vec!["sp.json", "c.mtx"]),
        (vec!["cholesky".into(), f("s.mtx"), "--verify".into(), "--json".into(), f("ch.json")], vec!["ch.json"]),
        (vec!["simulate".into(), f("a.mtx"), "--preset".into(), "reap64-spgemm".into(), "--json".into(), f("sim.json"), "--csv".into(), f("sim.csv")], vec!["sim.json", "sim.csv"]),
        (vec!["simulate".into(), f("s.mtx"), "--kernel".into(), "cholesky".into(), "--preset".into(), "reap32-chol".into(), "--json".into(), f("simc.json"), "--csv".into(), f("simc.csv")], vec!["simc.json", "simc.csv"]),
        (vec!["sweep".into(), f("a.mtx"), "--vary".into(), "pipelines".into(), "--values".into(), "1,2,4,8,16,32".into(), "--threads".into(), "4".into(), "--csv".into(), f("sw.csv"), "--json".into(), f("sw.json")], vec!["sw.csv", "sw.json"]),
        (vec!["sweep".into(), "--vary".into(), "density".into(), "--values".into(), "0.001,0.01".into(), "--n".into(), "300".into(), "--seed".into(), "7".into()], vec![]),
    ];
    for (args, outs) in &cmds {
        run_twice(d, args, outs)?;
    }
    Ok(format!("{} commands repeated with identical output bytes", cmds.len()))
}

fn info_gflops_per_unit() -> Result<String, String> {
    let a = random_sparse(1000, 1000, 0.005, 1).map_err(e2s)?;
    let mut parts = Vec::new();
    for p in [1usize, 4, 8, 32, 128] {
        let r = sim_spgemm(&a, &SimConfig { pipelines: p, ..SimConfig::default() })?;
        parts.push(format!("P={p}: {:.4} vs serial {:.4}", r.gflops_per_fp_unit, r.serial_gflops_per_fp_unit));
    }
    Ok(parts.join("; "))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("SpGEMM matches the dense oracle", criterion_1),
        ("Cholesky residual and symbolic pattern", criterion_2),
        ("RIR round-trip and golden bytes", criterion_3),
        ("bundle capacity and splitting", criterion_4),
        ("simulator bandwidth cap and conservation", criterion_5),
        ("simulator trends", criterion_6),
        ("overlap model identities", criterion_7),
        ("preset parameters", criterion_8),
        ("determinism of reports", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_else(|| "panic".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        let result = match result {
            Ok(detail) if i < 2 && secs >= 60.0 => Err(format!("took {secs:.1} s, limit 60 s ({detail})")),
            r => r,
        };
        match result {
            Ok(detail) => println!("criterion {} ({name}): PASS: {detail} [{secs:.2} s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} ({name}): FAIL: {detail} [{secs:.2} s]", i + 1);
            }
        }
    }
    match info_gflops_per_unit() {
        Ok(s) => println!("info (GFLOPS per FP unit, n=1000 d=0.005): {s}"),
        Err(e) => println!("info (GFLOPS per FP unit): could not measure: {e}"),
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
