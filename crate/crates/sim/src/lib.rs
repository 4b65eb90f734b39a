//! Cycle-approximate simulation of replicated match/multiply/sort/merge
//! pipelines (SpGEMM) and dot-product/div-sqrt pipelines (Cholesky) fed
//! through a bandwidth-capped memory channel.

pub mod cholesky;
pub mod config;
pub mod error;
pub mod memory;
pub mod overlap;
pub mod report;
pub mod spgemm;

pub use cholesky::{simulate_cholesky, CholeskyOutcome};
pub use config::{preset, CostModel, Kernel, SimConfig, PRESET_NAMES};
pub use error::{Result, SimError};
pub use memory::MemoryChannel;
pub use overlap::{model_overlap, prep_compute_split};
pub use report::{SimReport, StageReport, SCHEMA_VERSION};
pub use spgemm::{simulate_spgemm, SpgemmOutcome};
