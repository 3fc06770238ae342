//! Allocation-only core of the ordering laboratory.
//!
//! Everything here is pure computation over in-memory values: a small
//! tensor type and hand-differentiated networks, dataset transforms, the
//! ordering-approximation data loader, the exhaustive batch-permutation
//! explorer, sum augmentation schedules and test-time augmentation. File
//! formats, threads and the command line live in the `ordlab` crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod data;
pub mod error;
pub mod exec;
pub mod explorer;
pub mod metrics;
pub mod nn;
pub mod poa;
pub mod real;
pub mod rng;
pub mod sumaug;
pub mod tensor;
pub mod train;
pub mod tta;

pub use error::{Error, Result};
pub use real::Real;
pub use tensor::Tensor;
