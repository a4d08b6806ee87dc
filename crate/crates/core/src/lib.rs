//! Event-driven simulation and analysis of the constrained lattice gas (CLG).
//!
//! The CLG is an exclusion process on a `d`-dimensional lattice in which a
//! particle may jump to an empty neighbour only if at least one of its other
//! neighbours is occupied. This crate provides:
//!
//! * [`lattice`]: geometry, configurations, and the incrementally maintained
//!   set of allowed jumps;
//! * [`dynamics`]: exact continuous-time evolution (bulk and reservoir
//!   boundaries), initial conditions, absorption times, checkpoints;
//! * [`observables`]: estimators for active density, activity, conductivity,
//!   correlations, compressibility and number variance;
//! * [`exact1d`]: closed-form one-dimensional results and the Markov-chain
//!   sampler of the stationary measure;
//! * [`boundary`]: the boundary-driven Dirichlet problem, stationary profiles
//!   and current ledgers;
//! * [`exponents`]: power-law fits and scaling-relation checks;
//! * [`orchestrator`]: reproducible experiment recipes used by the `clg` CLI.

pub mod boundary;
pub mod dynamics;
pub mod error;
pub mod exact1d;
pub mod exponents;
pub mod lattice;
pub mod observables;
pub mod orchestrator;
pub mod stats;

pub use error::{ClgError, Result};
