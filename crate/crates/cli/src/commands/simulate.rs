use std::path::Path;
use std::time::Instant;

use anyhow::Result;
use reapkit_core::cholesky::{build_etree, symbolic_pattern};
use reapkit_core::matrix::make_spd;
use reapkit_core::rir::{build_cholesky_schedule, spgemm_groups, SpgemmSchedule};
use reapkit_core::CsrMatrix;
use reapkit_sim::{simulate_cholesky, simulate_spgemm, SimConfig, SimReport};
use serde_json::json;

use super::{load_csr, resolve_config};
use crate::args::{KernelArg, PrepArg, SimulateArgs};
use crate::manifest::{write_json, RunManifest};
use crate::usage;

/// Everything one simulation needs.
pub struct SimInput<'a> {
    pub matrix: &'a CsrMatrix,
    pub kernel: KernelArg,
    pub config: &'a SimConfig,
    pub make_spd: bool,
    pub prep: PrepArg,
}

/// Builds the schedule and simulates it. With measured preparation, each
/// group's schedule construction is timed on the host.
pub fn run_simulation(input: &SimInput) -> Result<SimReport> {
    let cfg = input.config;
    match input.kernel {
        KernelArg::Spgemm => {
            let a = input.matrix;
            let mut groups = Vec::new();
            let mut prep = Vec::new();
            let mut iter = spgemm_groups(a, a, cfg.pipelines, cfg.bundle_capacity)?;
            loop {
                let t = Instant::now();
                let Some(g) = iter.next() else { break };
                prep.push(t.elapsed().as_secs_f64());
                groups.push(g);
            }
            let schedule = SpgemmSchedule {
                capacity: cfg.bundle_capacity,
                pipelines: cfg.pipelines,
                a_shape: (a.rows(), a.cols()),
                b_shape: (a.rows(), a.cols()),
                groups,
            };
            let mut report = simulate_spgemm(&schedule, cfg)?.report;
            if input.prep == PrepArg::Measured && !prep.is_empty() {
                report.apply_prep(prep, "measured")?;
            }
            Ok(report)
        }
        KernelArg::Cholesky => {
            let m = if input.make_spd { make_spd(input.matrix)? } else { input.matrix.clone() };
            let csc = m.to_csc();
            let tree = build_etree(&csc)?;
            let pattern = symbolic_pattern(&csc, &tree)?;
            let t = Instant::now();
            let stream = build_cholesky_schedule(&csc, &pattern, cfg.bundle_capacity)?;
            let build = t.elapsed().as_secs_f64();
            let mut report = simulate_cholesky(&stream, &csc, &pattern, cfg)?.report;
            if input.prep == PrepArg::Measured && report.groups > 0 {
                // the stream is built in one pass; spread its time by work
                let modeled = report.group_prep_seconds.clone();
                let total: f64 = modeled.iter().sum();
                let prep = if total > 0.0 {
                    modeled.iter().map(|p| build * p / total).collect()
                } else {
                    vec![build / modeled.len() as f64; modeled.len()]
                };
                report.apply_prep(prep, "measured")?;
            }
            Ok(report)
        }
    }
}

pub fn config_json(cfg: &SimConfig) -> serde_json::Value {
    serde_json::to_value(cfg).expect("config serializes")
}

pub fn print_summary(r: &SimReport) {
    println!("kernel: {}, pipelines: {}, {} MHz", r.kernel.name(), r.config.pipelines, r.config.freq_mhz);
    println!("cycles: {} ({:.6e} s on the accelerator)", r.total_cycles, r.fpga_seconds);
    println!("host prep ({}): {:.6e} s; overlapped total: {:.6e} s", r.prep_source, r.cpu_prep_seconds, r.overlapped_total_seconds);
    println!("split: cpu {:.2}% / fpga {:.2}%", r.prep_percent, r.fpga_percent);
    println!("flops: {}, GFLOPS: {:.4}, per FP unit: {:.6} ({} units)", r.flops, r.gflops, r.gflops_per_fp_unit, r.fp_units);
    println!("serial model: {} cycles, speedup {:.3}", r.serial_cycles, r.speedup_vs_serial);
    println!("bytes read: {}, written: {}", r.bytes_read, r.bytes_written);
    println!("pipeline idle: {:.2}%", 100.0 * r.pipeline_idle_fraction);
}

pub(crate) fn write_csv(path: Option<&Path>, manifest: &RunManifest, lead: &[&str], rows: &[(Vec<String>, &SimReport)]) -> Result<()> {
    let mut buf = Vec::new();
    buf.extend_from_slice(format!("# manifest: {}\n", serde_json::to_string(manifest)?).as_bytes());
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        if let Some((_, first)) = rows.first() {
            let mut header: Vec<String> = lead.iter().map(|s| s.to_string()).collect();
            header.extend(first.csv_header());
            w.write_record(&header)?;
        }
        for (lead_vals, r) in rows {
            let mut rec = lead_vals.clone();
            rec.extend(r.csv_record());
            w.write_record(&rec)?;
        }
        w.flush()?;
    }
    match path {
        Some(p) => std::fs::write(p, buf).map_err(|e| anyhow::anyhow!("writing {}: {e}", p.display())),
        None => {
            print!("{}", String::from_utf8(buf)?);
            Ok(())
        }
    }
}

pub fn run(a: SimulateArgs) -> Result<()> {
    let cfg = resolve_config(&a.config, a.kernel)?;
    if a.make_spd && a.kernel != KernelArg::Cholesky {
        return Err(usage("--make-spd only applies to --kernel cholesky"));
    }
    let t = Instant::now();
    let m = load_csr(&a.a)?;
    let load = t.elapsed().as_secs_f64();
    let t = Instant::now();
    let report = run_simulation(&SimInput { matrix: &m, kernel: a.kernel, config: &cfg, make_spd: a.make_spd, prep: a.prep })?;
    let sim = t.elapsed().as_secs_f64();
    print_summary(&report);
    let mut man = RunManifest::new(
        "simulate",
        &[a.a.as_path()],
        json!({
            "kernel": report.kernel.name(),
            "preset": a.config.preset,
            "make_spd": a.make_spd,
            "prep": format!("{:?}", a.prep).to_lowercase(),
            "sim": config_json(&cfg),
        }),
    );
    if a.timings {
        man.timing("load", load);
        man.timing("simulate", sim);
        println!("timings: load {load:.6} s, simulate {sim:.6} s");
    }
    if let Some(p) = &a.json {
        write_json(p, &man, &report)?;
    }
    if let Some(p) = &a.csv {
        write_csv(Some(p), &man, &[], &[(Vec::new(), &report)])?;
    }
    Ok(())
}
