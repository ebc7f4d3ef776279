// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod assembly;
pub mod config;
pub mod discretization;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod kernels;
pub mod multiplier;
pub mod neighbors;
pub mod params;
pub mod quadrature;
pub mod solver;

pub use error::{Error, Result};
