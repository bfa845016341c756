//! Service rate and recovery probability of quasi-symmetric storage
//! allocations.
//!
//! A file of `k` blocks is MDS-encoded into `mk` blocks and spread evenly
//! over `alpha * m` of the `N` nodes of a storage system (each data node
//! holds `k / alpha` blocks). A request reaches a random set of nodes and is
//! served by the fastest `alpha` of the reached data nodes. This crate
//! evaluates the resulting recovery probability and expected service rate in
//! closed form, bounds the regions where spreading beats replication,
//! sweeps the spreading parameter, and checks everything against a seeded
//! Monte Carlo simulator.
//!
//! The numerical core is generic over [`Real`] (`f32` or `f64`); the
//! `*F64` aliases below fix the common case.

pub mod analytic;
pub mod bounds;
pub mod combinatorics;
pub mod error;
pub mod model;
pub mod monte_carlo;
pub mod optimizer;
pub mod report;
mod scalar;

pub use error::{Error, Result, Violation, ViolationCode, Violations};
pub use scalar::Real;

pub type AccessModelF64 = model::AccessModel<f64>;
pub type ServiceModelF64 = model::ServiceModel<f64>;
pub type PhiDistributionF64 = model::PhiDistribution<f64>;
pub type RateReportF64 = analytic::RateReport<f64>;
pub type RegionReportF64 = bounds::RegionReport<f64>;
pub type SweepTableF64 = optimizer::SweepTable<f64>;

pub type AccessModelF32 = model::AccessModel<f32>;
pub type ServiceModelF32 = model::ServiceModel<f32>;
pub type RateReportF32 = analytic::RateReport<f32>;
pub type RegionReportF32 = bounds::RegionReport<f32>;
pub type SweepTableF32 = optimizer::SweepTable<f32>;
