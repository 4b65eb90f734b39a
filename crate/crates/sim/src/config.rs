use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use reapkit_core::rir::MAX_BUNDLE_CAPACITY;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    Spgemm,
    Cholesky,
}

impl Kernel {
    pub fn name(self) -> &'static str {
        match self {
            Kernel::Spgemm => "spgemm",
            Kernel::Cholesky => "cholesky",
        }
    }
}

/// Per-stage costs in accelerator cycles. These are assumptions typical of
/// FPGA floating-point IP, not measured values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostModel {
    pub cam_load: u64,
    pub cam_lookup: u64,
    pub mul_latency: u64,
    pub sort_insert: u64,
    pub merge: u64,
    pub div_latency: u64,
    pub sqrt_latency: u64,
    /// Fixed DRAM access latency added to every transfer.
    pub mem_latency: u64,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel {
            cam_load: 1,
            cam_lookup: 1,
            mul_latency: 3,
            sort_insert: 1,
            merge: 1,
            div_latency: 14,
            sqrt_latency: 14,
            mem_latency: 25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub pipelines: usize,
    pub freq_mhz: f64,
    pub bundle_capacity: usize,
    pub cam_size: usize,
    pub read_bw_gbps: f64,
    pub write_bw_gbps: f64,
    pub multipliers_per_pe: usize,
    /// Partials the sort shift register holds before merging must spill.
    pub sort_capacity: usize,
    /// Elements of merged output a pipeline can hold ahead of the write port.
    pub buffer_depth: usize,
    pub element_bytes: usize,
    /// Modelled host time per element touched while building bundles.
    pub prep_ns_per_element: f64,
    pub costs: CostModel,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            pipelines: 32,
            freq_mhz: 250.0,
            bundle_capacity: 32,
            cam_size: 32,
            read_bw_gbps: 14.0,
            write_bw_gbps: 14.0,
            multipliers_per_pe: 1,
            sort_capacity: 64,
            buffer_depth: 32,
            element_bytes: 8,
            prep_ns_per_element: 2.0,
            costs: CostModel::default(),
        }
    }
}

pub const PRESET_NAMES: [&str; 5] =
    ["reap32-spgemm", "reap64-spgemm", "reap128-spgemm", "reap32-chol", "reap64-chol"];

/// Named accelerator configurations.
pub fn preset(name: &str) -> Result<SimConfig> {
    let base = SimConfig::default();
    let cfg = match name {
        "reap32-spgemm" => base,
        "reap64-spgemm" => SimConfig { pipelines: 64, read_bw_gbps: 147.0, write_bw_gbps: 73.0, ..base },
        "reap128-spgemm" => SimConfig {
            pipelines: 128,
            freq_mhz: 220.0,
            read_bw_gbps: 147.0,
            write_bw_gbps: 73.0,
            ..base
        },
        "reap32-chol" => SimConfig { multipliers_per_pe: 8, ..base },
        "reap64-chol" => SimConfig {
            pipelines: 64,
            freq_mhz: 238.0,
            multipliers_per_pe: 16,
            read_bw_gbps: 147.0,
            write_bw_gbps: 73.0,
            ..base
        },
        other => return Err(SimError::UnknownPreset(other.to_string())),
    };
    Ok(cfg)
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("pipelines", self.pipelines),
            ("bundle_capacity", self.bundle_capacity),
            ("cam_size", self.cam_size),
            ("multipliers_per_pe", self.multipliers_per_pe),
            ("sort_capacity", self.sort_capacity),
            ("buffer_depth", self.buffer_depth),
            ("element_bytes", self.element_bytes),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(SimError::InvalidConfig(format!("{name} must be at least 1")));
            }
        }
        for (name, v) in [
            ("freq_mhz", self.freq_mhz),
            ("read_bw_gbps", self.read_bw_gbps),
            ("write_bw_gbps", self.write_bw_gbps),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(SimError::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.prep_ns_per_element.is_finite() && self.prep_ns_per_element >= 0.0) {
            return Err(SimError::InvalidConfig("prep_ns_per_element must be non-negative".into()));
        }
        if self.cam_size < self.bundle_capacity {
            return Err(SimError::InvalidConfig(format!(
                "cam_size {} is smaller than bundle_capacity {}",
                self.cam_size, self.bundle_capacity
            )));
        }
        if self.bundle_capacity > MAX_BUNDLE_CAPACITY {
            return Err(SimError::InvalidConfig(format!(
                "bundle_capacity {} exceeds {MAX_BUNDLE_CAPACITY}",
                self.bundle_capacity
            )));
        }
        Ok(())
    }

    pub fn read_budget(&self) -> f64 {
        self.read_bw_gbps * 1e9 / (self.freq_mhz * 1e6)
    }

    pub fn write_budget(&self) -> f64 {
        self.write_bw_gbps * 1e9 / (self.freq_mhz * 1e6)
    }

    pub fn cycles_to_seconds(&self, cycles: u64) -> f64 {
        cycles as f64 / (self.freq_mhz * 1e6)
    }

    /// Floating-point units in the design: SpGEMM pipelines have one
    /// multiplier and one merge adder; Cholesky pipelines have a dot PE of
    /// `multipliers_per_pe` multipliers and one div/sqrt unit.
    pub fn fp_units(&self, kernel: Kernel) -> u64 {
        let p = self.pipelines as u64;
        match kernel {
            Kernel::Spgemm => 2 * p,
            Kernel::Cholesky => p * self.multipliers_per_pe as u64 + p,
        }
    }

    pub fn prep_seconds(&self, elements: usize) -> f64 {
        elements as f64 * self.prep_ns_per_element * 1e-9
    }
}
