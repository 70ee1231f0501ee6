//! Numerical core of the social-pose encoding benchmark.
//!
//! The crate is `no_std` and only needs an allocator. File formats, the
//! command line and run bookkeeping live in the `sociopose` crate.
//!
//! * [`pose`]: depth fusion and clip-level joint / social pose descriptors.
//! * [`projection`]: Johnson-Lindenstrauss sizing and sparse random projection.
//! * [`ridge`]: leak-free standardized ridge encoding with repeated k-fold
//!   selection of layer and penalty.
//! * [`grouped`]: banded ridge over feature groups with Dirichlet random search.
//! * [`stats`]: permutation tests, semi-partial correlation, split-half
//!   reliability and score summaries.
//! * [`synth`]: synthetic dyadic scenes with analytic ground truth.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod grouped;
pub mod linalg;
pub mod math;
pub mod pose;
pub mod projection;
pub mod ridge;
pub mod seed;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
pub use linalg::Matrix;
