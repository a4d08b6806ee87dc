//! Lattice geometry, occupancy configurations and the allowed-jump set.

mod configuration;
mod edges;
mod geometry;

pub use configuration::Configuration;
pub use edges::{allowed_jumps, ActiveEdgeSet};
pub use geometry::{BoundaryMode, Geometry, Neighbor};
