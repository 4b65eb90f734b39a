use serde::{Deserialize, Serialize};

use crate::config::{Kernel, SimConfig};
use crate::error::Result;
use crate::overlap::{model_overlap, split};

pub const SCHEMA_VERSION: &str = "reapkit.simreport/1";

/// Cycle counts of one stage, one entry per pipeline.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageReport {
    pub stage: String,
    pub busy: Vec<u64>,
    pub idle: Vec<u64>,
    pub stalled: Vec<u64>,
}

impl StageReport {
    pub fn busy_total(&self) -> u64 {
        self.busy.iter().sum()
    }

    pub fn idle_total(&self) -> u64 {
        self.idle.iter().sum()
    }

    pub fn stalled_total(&self) -> u64 {
        self.stalled.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub schema: String,
    pub kernel: Kernel,
    pub config: SimConfig,
    /// SpGEMM row groups or Cholesky columns.
    pub groups: u64,
    pub total_cycles: u64,
    pub fpga_seconds: f64,
    pub cpu_prep_seconds: f64,
    /// `measured` or `modeled`.
    pub prep_source: String,
    pub overlapped_total_seconds: f64,
    pub prep_percent: f64,
    pub fpga_percent: f64,
    pub flops: u64,
    pub gflops: f64,
    pub fp_units: u64,
    pub gflops_per_fp_unit: f64,
    pub serial_cycles: u64,
    pub serial_gflops_per_fp_unit: f64,
    pub speedup_vs_serial: f64,
    /// Multiplications the functional engine performs.
    pub partials: u64,
    /// Multiplications the simulated pipelines issued.
    pub multiplies: u64,
    /// Of `multiplies`, those repeating work another pipeline also does.
    pub redundant_multiplies: u64,
    pub explicit_zeros: u64,
    pub output_nnz: u64,
    pub bytes_read: u64,
    pub bytes_written: u64,
    pub read_budget_bytes_per_cycle: f64,
    pub write_budget_bytes_per_cycle: f64,
    pub peak_read_bytes_per_cycle: f64,
    pub peak_write_bytes_per_cycle: f64,
    pub pipeline_idle_fraction: f64,
    pub stages: Vec<StageReport>,
    #[serde(skip)]
    pub group_fpga_seconds: Vec<f64>,
    #[serde(skip)]
    pub group_prep_seconds: Vec<f64>,
}

impl SimReport {
    /// Replaces the host preparation times (one per group) and recomputes
    /// the overlap figures.
    pub fn apply_prep(&mut self, prep: Vec<f64>, source: &str) -> Result<()> {
        self.overlapped_total_seconds = model_overlap(&prep, &self.group_fpga_seconds)?;
        self.cpu_prep_seconds = prep.iter().sum();
        let (c, f) = split(self.cpu_prep_seconds, self.fpga_seconds)?;
        self.prep_percent = c;
        self.fpga_percent = f;
        self.prep_source = source.to_string();
        self.group_prep_seconds = prep;
        Ok(())
    }

    pub fn stage(&self, name: &str) -> Option<&StageReport> {
        self.stages.iter().find(|s| s.stage == name)
    }

    /// CSV column names; stage columns follow the kernel's stage list.
    pub fn csv_header(&self) -> Vec<String> {
        let mut h: Vec<String> = [
            "schema",
            "kernel",
            "pipelines",
            "freq_mhz",
            "bundle_capacity",
            "cam_size",
            "read_bw_gbps",
            "write_bw_gbps",
            "multipliers_per_pe",
            "sort_capacity",
            "buffer_depth",
            "groups",
            "total_cycles",
            "fpga_seconds",
            "cpu_prep_seconds",
            "prep_source",
            "overlapped_total_seconds",
            "prep_percent",
            "fpga_percent",
            "flops",
            "gflops",
            "fp_units",
            "gflops_per_fp_unit",
            "serial_cycles",
            "serial_gflops_per_fp_unit",
            "speedup_vs_serial",
            "partials",
            "multiplies",
            "redundant_multiplies",
            "explicit_zeros",
            "output_nnz",
            "bytes_read",
            "bytes_written",
            "read_budget_bytes_per_cycle",
            "write_budget_bytes_per_cycle",
            "peak_read_bytes_per_cycle",
            "peak_write_bytes_per_cycle",
            "pipeline_idle_fraction",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        for s in &self.stages {
            for k in ["busy", "idle", "stalled"] {
                h.push(format!("{}_{k}", s.stage));
            }
        }
        h
    }

    /// One CSV record matching [`SimReport::csv_header`]; stage columns are
    /// totals over pipelines.
    pub fn csv_record(&self) -> Vec<String> {
        let c = &self.config;
        let mut r = vec![
            self.schema.clone(),
            self.kernel.name().to_string(),
            c.pipelines.to_string(),
            c.freq_mhz.to_string(),
            c.bundle_capacity.to_string(),
            c.cam_size.to_string(),
            c.read_bw_gbps.to_string(),
            c.write_bw_gbps.to_string(),
            c.multipliers_per_pe.to_string(),
            c.sort_capacity.to_string(),
            c.buffer_depth.to_string(),
            self.groups.to_string(),
            self.total_cycles.to_string(),
            self.fpga_seconds.to_string(),
            self.cpu_prep_seconds.to_string(),
            self.prep_source.clone(),
            self.overlapped_total_seconds.to_string(),
            self.prep_percent.to_string(),
            self.fpga_percent.to_string(),
            self.flops.to_string(),
            self.gflops.to_string(),
            self.fp_units.to_string(),
            self.gflops_per_fp_unit.to_string(),
            self.serial_cycles.to_string(),
            self.serial_gflops_per_fp_unit.to_string(),
            self.speedup_vs_serial.to_string(),
            self.partials.to_string(),
            self.multiplies.to_string(),
            self.redundant_multiplies.to_string(),
            self.explicit_zeros.to_string(),
            self.output_nnz.to_string(),
            self.bytes_read.to_string(),
            self.bytes_written.to_string(),
            self.read_budget_bytes_per_cycle.to_string(),
            self.write_budget_bytes_per_cycle.to_string(),
            self.peak_read_bytes_per_cycle.to_string(),
            self.peak_write_bytes_per_cycle.to_string(),
            self.pipeline_idle_fraction.to_string(),
        ];
        for s in &self.stages {
            r.push(s.busy_total().to_string());
            r.push(s.idle_total().to_string());
            r.push(s.stalled_total().to_string());
        }
        r
    }
}

/// Busy and stalled counters per stage and pipeline; idle is derived.
#[derive(Debug, Clone)]
pub(crate) struct StageTally {
    names: Vec<&'static str>,
    busy: Vec<Vec<u64>>,
    stalled: Vec<Vec<u64>>,
}

impl StageTally {
    pub(crate) fn new(names: &[&'static str], pipelines: usize) -> Self {
        StageTally {
            names: names.to_vec(),
            busy: vec![vec![0; pipelines]; names.len()],
            stalled: vec![vec![0; pipelines]; names.len()],
        }
    }

    pub(crate) fn busy(&mut self, stage: usize, p: usize, cycles: u64) {
        self.busy[stage][p] += cycles;
    }

    pub(crate) fn stall(&mut self, stage: usize, p: usize, cycles: u64) {
        self.stalled[stage][p] += cycles;
    }

    pub(crate) fn busy_of(&self, stage: usize) -> &[u64] {
        &self.busy[stage]
    }

    pub(crate) fn finish(self, total: u64) -> Vec<StageReport> {
        self.names
            .iter()
            .zip(self.busy)
            .zip(self.stalled)
            .map(|((name, busy), stalled)| {
                let idle = busy
                    .iter()
                    .zip(&stalled)
                    .map(|(b, s)| {
                        assert!(b + s <= total, "stage {name} accounts {} of {total} cycles", b + s);
                        total - b - s
                    })
                    .collect();
                StageReport { stage: name.to_string(), busy, idle, stalled }
            })
            .collect()
    }
}

/// Inputs shared by both kernels when building a report.
pub(crate) struct Totals {
    pub kernel: Kernel,
    pub groups: u64,
    pub total_cycles: u64,
    pub serial_cycles: u64,
    pub flops: u64,
    pub partials: u64,
    pub multiplies: u64,
    pub redundant_multiplies: u64,
    pub explicit_zeros: u64,
    pub output_nnz: u64,
    pub bytes_read: u64,
    pub bytes_written: u64,
    pub peak_read: f64,
    pub peak_write: f64,
    pub pipeline_idle_fraction: f64,
    pub group_cycles: Vec<u64>,
    pub group_elements: Vec<usize>,
}

pub(crate) fn build_report(
    config: &SimConfig,
    t: Totals,
    stages: Vec<StageReport>,
) -> Result<SimReport> {
    let fpga_seconds = config.cycles_to_seconds(t.total_cycles);
    let serial_seconds = config.cycles_to_seconds(t.serial_cycles);
    let fp_units = config.fp_units(t.kernel);
    let gflops = if fpga_seconds > 0.0 { t.flops as f64 / fpga_seconds / 1e9 } else { 0.0 };
    let serial_gflops = if serial_seconds > 0.0 { t.flops as f64 / serial_seconds / 1e9 } else { 0.0 };
    let speedup = if t.total_cycles > 0 { t.serial_cycles as f64 / t.total_cycles as f64 } else { 0.0 };
    let group_fpga_seconds: Vec<f64> = t.group_cycles.iter().map(|&c| config.cycles_to_seconds(c)).collect();
    let prep: Vec<f64> = t.group_elements.iter().map(|&e| config.prep_seconds(e)).collect();
    let mut report = SimReport {
        schema: SCHEMA_VERSION.to_string(),
        kernel: t.kernel,
        config: config.clone(),
        groups: t.groups,
        total_cycles: t.total_cycles,
        fpga_seconds,
        cpu_prep_seconds: 0.0,
        prep_source: String::new(),
        overlapped_total_seconds: fpga_seconds,
        prep_percent: 0.0,
        fpga_percent: 100.0,
        flops: t.flops,
        gflops,
        fp_units,
        gflops_per_fp_unit: gflops / fp_units as f64,
        serial_cycles: t.serial_cycles,
        serial_gflops_per_fp_unit: serial_gflops,
        speedup_vs_serial: speedup,
        partials: t.partials,
        multiplies: t.multiplies,
        redundant_multiplies: t.redundant_multiplies,
        explicit_zeros: t.explicit_zeros,
        output_nnz: t.output_nnz,
        bytes_read: t.bytes_read,
        bytes_written: t.bytes_written,
        read_budget_bytes_per_cycle: config.read_budget(),
        write_budget_bytes_per_cycle: config.write_budget(),
        peak_read_bytes_per_cycle: t.peak_read,
        peak_write_bytes_per_cycle: t.peak_write,
        pipeline_idle_fraction: t.pipeline_idle_fraction,
        stages,
        group_fpga_seconds,
        group_prep_seconds: Vec::new(),
    };
    if !prep.is_empty() && (prep.iter().sum::<f64>() + fpga_seconds) > 0.0 {
        report.apply_prep(prep, "modeled")?;
    } else {
        report.prep_source = "modeled".into();
    }
    Ok(report)
}
