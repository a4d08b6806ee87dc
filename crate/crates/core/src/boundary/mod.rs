//! Boundary-driven systems: the discrete Dirichlet problem for the active
//! density, measured stationary profiles and face currents.

mod current;
mod dirichlet;
mod profile;

pub use current::{pooled_rate, CurrentLedger, CurrentSlope};
pub use dirichlet::{dirichlet_solve, harmonic_residual, Coupling, DirichletSolution};
pub use profile::{measure_stationary_profile, ProfileProtocol, StationaryProfile};
