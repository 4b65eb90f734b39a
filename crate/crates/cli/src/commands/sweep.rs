use anyhow::{Context, Result};
use rayon::prelude::*;
use reapkit_core::matrix::random_sparse;
use reapkit_core::CsrMatrix;
use reapkit_sim::{SimConfig, SimReport};
use serde::Serialize;
use serde_json::json;

use super::simulate::{config_json, run_simulation, write_csv, SimInput};
use super::{load_csr, resolve_config};
use crate::args::{PrepArg, SweepArgs, Vary};
use crate::manifest::{write_json, RunManifest};
use crate::usage;

pub const THREADS_ENV: &str = "REAPKIT_THREADS";

#[derive(Serialize)]
struct Point<'a> {
    vary: &'static str,
    value: f64,
    report: &'a SimReport,
}

fn vary_name(v: Vary) -> &'static str {
    match v {
        Vary::Pipelines => "pipelines",
        Vary::Bandwidth => "bandwidth",
        Vary::Density => "density",
    }
}

fn pool_size(flag: Option<usize>) -> Result<Option<usize>> {
    if let Some(n) = flag {
        return Ok(Some(n));
    }
    match std::env::var(THREADS_ENV) {
        Ok(s) => s.trim().parse().map(Some).map_err(|_| usage(format!("{THREADS_ENV}={s} is not a thread count"))),
        Err(_) => Ok(None),
    }
}

pub fn run(a: SweepArgs) -> Result<()> {
    if a.values.is_empty() {
        return Err(usage("--values needs at least one value"));
    }
    let base = resolve_config(&a.config, a.kernel)?;
    let input: Option<CsrMatrix> = match (&a.a, a.vary) {
        (Some(p), _) => Some(load_csr(p)?),
        (None, Vary::Density) => None,
        (None, _) => return Err(usage("an input matrix is required unless --vary density")),
    };
    let mut points: Vec<(f64, SimConfig)> = Vec::with_capacity(a.values.len());
    for &v in &a.values {
        let mut c = base.clone();
        match a.vary {
            Vary::Pipelines => {
                if v < 1.0 || v.fract() != 0.0 {
                    return Err(usage(format!("pipeline count {v} is not a positive integer")));
                }
                c.pipelines = v as usize;
            }
            Vary::Bandwidth => {
                c.read_bw_gbps = v;
                c.write_bw_gbps = v;
            }
            Vary::Density => {
                if !(v > 0.0 && v <= 1.0) {
                    return Err(usage(format!("density {v} is outside (0, 1]")));
                }
            }
        }
        c.validate().map_err(|e| usage(e.to_string()))?;
        points.push((v, c));
    }
    let threads = pool_size(a.threads)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().context("building worker pool")?;
    let results: Vec<Result<SimReport>> = pool.install(|| {
        points
            .par_iter()
            .map(|(v, cfg)| {
                let generated;
                let m = match &input {
                    Some(m) => m,
                    None => {
                        generated = random_sparse(a.n, a.n, *v, a.seed)?;
                        &generated
                    }
                };
                run_simulation(&SimInput { matrix: m, kernel: a.kernel, config: cfg, make_spd: a.make_spd, prep: PrepArg::Modeled })
            })
            .collect()
    });
    let reports = results.into_iter().collect::<Result<Vec<_>>>()?;

    let mut man = RunManifest::new(
        "sweep",
        &a.a.iter().map(|p| p.as_path()).collect::<Vec<_>>(),
        json!({
            "kernel": format!("{:?}", a.kernel).to_lowercase(),
            "vary": vary_name(a.vary),
            "values": a.values,
            "n": if a.a.is_none() { Some(a.n) } else { None },
            "make_spd": a.make_spd,
            "preset": a.config.preset,
            "sim": config_json(&base),
        }),
    );
    man.seed = if a.a.is_none() { Some(a.seed) } else { None };
    let rows: Vec<(Vec<String>, &SimReport)> = a
        .values
        .iter()
        .zip(&reports)
        .map(|(v, r)| (vec![vary_name(a.vary).to_string(), v.to_string()], r))
        .collect();
    if let Some(p) = &a.json {
        let pts: Vec<Point> = a.values.iter().zip(&reports).map(|(v, r)| Point { vary: vary_name(a.vary), value: *v, report: r }).collect();
        write_json(p, &man, &pts)?;
    }
    if a.csv.is_some() || a.json.is_none() {
        write_csv(a.csv.as_deref(), &man, &["vary", "value"], &rows)?;
    }
    if a.csv.is_some() || a.json.is_some() {
        for (v, r) in a.values.iter().zip(&reports) {
            println!("{}={v}: cycles {}, speedup vs serial {:.3}, idle {:.2}%", vary_name(a.vary), r.total_cycles, r.speedup_vs_serial, 100.0 * r.pipeline_idle_fraction);
        }
    }
    Ok(())
}
