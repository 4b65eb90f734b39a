mod cholesky;
mod convert;
mod gen;
mod simulate;
mod spgemm;
mod sweep;

use std::path::Path;

use anyhow::{Context, Result};
use reapkit_core::matrix::load_matrix_market;
use reapkit_core::CsrMatrix;
use reapkit_sim::{preset, SimConfig};

use crate::args::{Cli, Command, ConfigArgs, KernelArg};
use crate::usage;

pub use simulate::{run_simulation, SimInput};

pub fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Convert(a) => convert::run(a),
        Command::Spgemm(a) => spgemm::run(a),
        Command::Cholesky(a) => cholesky::run(a),
        Command::Simulate(a) => simulate::run(a),
        Command::Sweep(a) => sweep::run(a),
        Command::Gen(a) => gen::run(a),
    }
}

pub(crate) fn load_csr(path: &Path) -> Result<CsrMatrix> {
    Ok(load_matrix_market(path).with_context(|| format!("loading {}", path.display()))?.to_csr())
}

pub(crate) fn extension(path: &Path) -> String {
    path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase()
}

/// Preset (or the kernel's 32-pipeline preset) overridden by explicit flags.
pub fn resolve_config(args: &ConfigArgs, kernel: KernelArg) -> Result<SimConfig> {
    let name = args.preset.clone().unwrap_or_else(|| match kernel {
        KernelArg::Spgemm => "reap32-spgemm".into(),
        KernelArg::Cholesky => "reap32-chol".into(),
    });
    let mut c = preset(&name).map_err(|e| usage(e.to_string()))?;
    if let Some(v) = args.pipelines {
        c.pipelines = v;
    }
    if let Some(v) = args.freq_mhz {
        c.freq_mhz = v;
    }
    if let Some(v) = args.capacity {
        c.bundle_capacity = v;
        if args.cam_size.is_none() {
            c.cam_size = c.cam_size.max(v);
        }
    }
    if let Some(v) = args.cam_size {
        c.cam_size = v;
    }
    if let Some(v) = args.read_bw {
        c.read_bw_gbps = v;
    }
    if let Some(v) = args.write_bw {
        c.write_bw_gbps = v;
    }
    if let Some(v) = args.multipliers {
        c.multipliers_per_pe = v;
    }
    if let Some(v) = args.sort_capacity {
        c.sort_capacity = v;
    }
    if let Some(v) = args.buffer_depth {
        c.buffer_depth = v;
    }
    c.validate().map_err(|e| usage(e.to_string()))?;
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::UsageError;

    #[test]
    fn flags_override_preset() {
        let args = ConfigArgs { preset: Some("reap64-chol".into()), pipelines: Some(8), capacity: Some(64), ..Default::default() };
        let c = resolve_config(&args, KernelArg::Spgemm).unwrap();
        assert_eq!((c.pipelines, c.freq_mhz, c.multipliers_per_pe), (8, 238.0, 16));
        assert_eq!((c.bundle_capacity, c.cam_size), (64, 64));
    }

    #[test]
    fn kernel_picks_default_preset() {
        let c = resolve_config(&ConfigArgs::default(), KernelArg::Cholesky).unwrap();
        assert_eq!(c.multipliers_per_pe, 8);
    }

    #[test]
    fn bad_values_are_usage_errors() {
        let args = ConfigArgs { cam_size: Some(4), ..Default::default() };
        let e = resolve_config(&args, KernelArg::Spgemm).unwrap_err();
        assert!(e.downcast_ref::<UsageError>().is_some());
    }
}
