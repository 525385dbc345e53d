//! Optimal user association for Massive-MIMO ultra-dense small-cell clusters.
//!
//! The crate drops random clusters of multi-antenna access nodes (ANs) and
//! single-antenna users (UEs), evaluates the large-scale effective SINR of any
//! association, builds the exact mixed-integer linear program for the max-min
//! SINR association, and solves it with a built-in branch-and-bound solver that
//! is cross-checked against exhaustive enumeration.
//!
//! Numeric kernels ([`sinr`], [`solver::lp`]) are generic over [`Scalar`]; the
//! aliases below pin them to `f64`, which is what the model builder, the
//! branch-and-bound solver and the experiment harness use.

pub mod error;
pub mod experiments;
pub mod format;
pub mod milp;
pub mod scalar;
pub mod scenario;
pub mod sinr;
pub mod solver;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type PathGainMatrix = sinr::PathGainMatrix<f64>;
pub type RateReport = sinr::RateReport<f64>;
pub type SinrEvaluator = sinr::SinrEvaluator<f64>;
pub type LpProblem = solver::lp::LpProblem<f64>;
pub type LpSolution = solver::lp::LpSolution<f64>;
