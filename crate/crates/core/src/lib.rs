//! Numerical toolkit for the Beltrami equation on the plane, the disk,
//! quasidisks and the half-infinite strip.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod diff;
pub mod error;
pub mod grid;
pub mod moebius;
pub mod params;
pub mod qbf;
pub mod solver;
pub mod transforms;
pub mod verify;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
