//! Kinetic Monte Carlo simulation of opinion formation in a follower
//! population steered by controlled leader families.
//!
//! Leaders carry an instantaneous feedback control that is embedded directly
//! into their binary interaction rule, so a forward stochastic particle
//! simulation is enough to reproduce the controlled dynamics. The crate also
//! ships the closed-form oracles used to validate the simulator: the moment
//! ODEs for mean opinions and energies, and the stationary densities of the
//! quasi-invariant (Fokker-Planck) limit.
//!
//! Module map:
//!
//! - [`opinion`], [`kernel`], [`strategy`], [`params`]: domain types shared
//!   by everything else.
//! - [`control`]: the leader feedback control and the binary cost it minimizes.
//! - [`interactions`]: the three binary interaction rules, noise, and the
//!   bound-preservation certificate.
//! - [`engine`]: the Monte Carlo stepper, initial laws, statistics.
//! - [`moments`]: mean/energy ODE oracles and a fixed-step RK4 integrator.
//! - [`steady`]: closed-form stationary densities and distances to histograms.

// Negated comparisons are how NaN inputs get rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod control;
pub mod engine;
mod error;
pub mod histogram;
pub mod interactions;
pub mod kernel;
pub mod moments;
pub mod opinion;
pub mod params;
pub mod quadrature;
pub mod steady;
pub mod strategy;

pub use error::{Error, Result};
pub use histogram::Histogram;
pub use kernel::{CompromiseKernel, DiffusionShape};
pub use opinion::Opinion;
pub use params::{FamilyScaling, Penalty, RawScaling, ScaledParams};
pub use strategy::{AdaptiveWindows, LeaderStrategy};
