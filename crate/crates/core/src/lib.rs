//! Exact conditional laws of lattice sums and their distance to the normal law.
//!
//! The crate computes `L(T_N | S_N = m)` for i.i.d. integer pairs `(X, Y)` by DFT
//! exponentiation, measures Kolmogorov distances under two standardizations, audits the
//! assumptions of a conditional Berry-Esseen bound, and evaluates its explicit constants.
//!
//! Numerical code is generic over [`Real`] (`f32`, `f64`); the aliases below fix `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod audit;
pub mod conditional;
pub mod error;
pub mod fourier;
pub mod harness;
pub mod kv;
pub mod lattice;
pub mod quadrature;
pub mod rng;
pub mod scalar;
pub mod zoo;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Pmf = lattice::LatticePmf<f64>;
pub type JointPmf = lattice::JointLatticePmf<f64>;
pub type Summary = lattice::MomentSummary<f64>;
pub type Spec = fourier::ExperimentSpec<f64>;
pub type Report = audit::AssumptionReport;
pub type Constants = audit::ConstantSet;
pub type Pmf32 = lattice::LatticePmf<f32>;
pub type JointPmf32 = lattice::JointLatticePmf<f32>;
