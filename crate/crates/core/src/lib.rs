//! Sparse linear-algebra building blocks for a CPU/accelerator split:
//! compressed matrix formats, the bundle intermediate representation the
//! host streams to the accelerator, and functional models of the two
//! kernels (row-by-row SpGEMM and left-looking sparse Cholesky).
//!
//! All sparse values are single precision. The dense oracles in
//! [`matrix::DenseMatrix`] run in double precision and exist to check the
//! kernels.

pub mod cholesky;
pub mod error;
pub mod matrix;
pub mod rir;
pub mod spgemm;

pub use error::{Error, Result};
pub use matrix::{CooMatrix, CscMatrix, CsrMatrix, DenseMatrix};
