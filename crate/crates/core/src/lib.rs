//! Two-stage resource optimization for green-powered OFDM cognitive radio
//! networks.
//!
//! Secondary users (SUs) harvest RF energy for the first fraction `θ` of every
//! slot, spend `τ` seconds sensing, and transmit for the remainder of the slot.
//! The crate splits the joint sub-channel / slot-structure problem into
//!
//! 1. [`allocation`]: energy-figure-of-merit (EFM) driven sub-channel
//!    assignment at a fixed initial harvesting ratio, and
//! 2. [`structopt`]: per-SU harvesting-ratio optimization, either through the
//!    Lambert-W closed form or a projected dual subgradient method that honours
//!    the interference and rate constraints.
//!
//! [`oracle`] holds brute-force reference solvers that share no arithmetic with
//! the solvers above, [`scenario`] generates seeded instances and runs the
//! experiment sweeps, and [`model`] carries the physical formulas every stage
//! consumes.

pub mod allocation;
pub mod error;
pub mod model;
pub mod oracle;
pub mod par;
pub mod scenario;
pub mod structopt;
#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
pub use model::{
    Allocation, ConstraintSlacks, PrimaryUser, Scenario, SecondaryUser, SensingModel, SlotSolution, SystemParams,
    ThetaInterval, TrafficClass,
};
pub use par::Execution;
