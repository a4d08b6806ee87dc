use serde::{Deserialize, Serialize};

use super::rng::{derive_rng, StreamPurpose};
use super::state::{SimulationState, StopCondition, StopReason};
use crate::error::{ClgError, Result};
use crate::lattice::Configuration;

/// Measurement protocol for long-lived but ultimately absorbing regimes.
///
/// Burn-in lasts `burn_in_factor · L²` time units, followed by `windows`
/// windows of length `window_time`; a measurement is taken at the end of each.
/// If the state absorbs at any point, the attempt is abandoned, logged, and a
/// fresh initial condition is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuasiProtocol {
    pub burn_in_factor: f64,
    pub windows: usize,
    pub window_time: f64,
    pub max_restarts: usize,
}

impl Default for QuasiProtocol {
    fn default() -> Self {
        QuasiProtocol { burn_in_factor: 10.0, windows: 100, window_time: 10.0, max_restarts: 20 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RestartRecord {
    pub attempt: usize,
    /// Time since the start of the attempt at which activity died.
    pub absorbed_at: f64,
    pub during_burn_in: bool,
    /// Completed windows thrown away with the attempt.
    pub windows_lost: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuasiRun<T> {
    pub samples: Vec<T>,
    pub restarts: Vec<RestartRecord>,
    pub final_time: f64,
}

/// Runs one replica of the quasi-stationary protocol. `initial` is called
/// once per attempt with the replica's initial-condition stream; `measure` is
/// called at the end of every measurement window.
pub fn quasi_stationary_run<T>(
    mut initial: impl FnMut(&mut super::SimRng) -> Result<Configuration>,
    protocol: &QuasiProtocol,
    root: u64,
    replica: u64,
    mut measure: impl FnMut(&SimulationState) -> T,
) -> Result<QuasiRun<T>> {
    let mut init_rng = derive_rng(root, replica, StreamPurpose::Initial);
    let mut dyn_rng = derive_rng(root, replica, StreamPurpose::Dynamics);
    let mut restarts = Vec::new();
    for attempt in 0..=protocol.max_restarts {
        let config = initial(&mut init_rng)?;
        let side = config.geometry().side() as f64;
        let mut state = SimulationState::new(config, dyn_rng)?;
        let burn = protocol.burn_in_factor * side * side;
        let mut samples = Vec::with_capacity(protocol.windows);
        let mut absorbed = state.run_until(StopCondition::at_time(burn)) == StopReason::Absorbed;
        let during_burn_in = absorbed;
        while !absorbed && samples.len() < protocol.windows {
            let target = burn + protocol.window_time * (samples.len() + 1) as f64;
            if state.run_until(StopCondition::at_time(target)) == StopReason::Absorbed {
                absorbed = true;
            } else {
                samples.push(measure(&state));
            }
        }
        if !absorbed {
            return Ok(QuasiRun { samples, restarts, final_time: state.time() });
        }
        restarts.push(RestartRecord {
            attempt,
            absorbed_at: state.time(),
            during_burn_in,
            windows_lost: samples.len(),
        });
        dyn_rng = state.rng().clone();
    }
    Err(ClgError::insufficient(format!(
        "replica {replica}: absorbed in all {} attempts",
        protocol.max_restarts + 1
    )))
}
