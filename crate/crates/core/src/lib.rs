//! Integral-form Legendre-Gauss-Lobatto collocation for optimal control.

// Index loops mirror the matrix algebra; NaN-aware negated comparisons are deliberate.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod basis;
pub mod benchmarks;
pub mod classic;
pub mod cli;
pub mod config;
pub mod costate;
pub mod error;
pub mod linalg;
pub mod ocp;
pub mod operators;
pub mod output;
pub mod solver;
pub mod transcription;

pub use error::{Error, Result};
