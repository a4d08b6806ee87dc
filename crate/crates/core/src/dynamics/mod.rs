//! Continuous-time evolution, initial conditions and run protocols.

mod absorption;
mod checkpoint;
mod initial;
mod quasi;
pub mod rng;
mod state;

pub use absorption::{absorption_times, AbsorptionSample, Censoring};
pub(crate) use absorption::absorption_run;
pub use checkpoint::Checkpoint;
pub use initial::{initial_condition, InitialKind};
pub use quasi::{quasi_stationary_run, QuasiProtocol, QuasiRun, RestartRecord};
pub use rng::{derive_rng, SimRng, StreamPurpose};
pub use state::{
    BoundarySpec, Event, FaceCounts, SimulationState, StepOutcome, StopCondition, StopReason,
};
