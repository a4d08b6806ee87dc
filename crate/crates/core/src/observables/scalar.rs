use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dynamics::SimulationState;
use crate::lattice::Configuration;
use crate::stats::Estimate;

/// `ρ_a = n_a / L^d`.
pub fn measure_rho_a(config: &Configuration) -> f64 {
    config.active_count() as f64 / config.geometry().volume() as f64
}

/// `a = 𝔞̃ / L^d` with `𝔞̃` the number of allowed ordered jumps.
pub fn measure_activity(config: &Configuration) -> f64 {
    crate::lattice::allowed_jumps(config).len() as f64 / config.geometry().volume() as f64
}

/// Activity from an already maintained jump set.
pub fn activity_of(state: &SimulationState) -> f64 {
    state.edges().len() as f64 / state.config().geometry().volume() as f64
}

/// Instantaneous conductivity estimate: half the mean of
/// `c_{i,i'} = (1-η_{i'})A_i + (1-η_i)A_{i'}` over ordered neighbour pairs.
///
/// Summing `c` over unordered edges counts every allowed jump once, so this
/// is `𝔞̃ / (2·#edges)`.
pub fn sigma_from_jumps(allowed: usize, config: &Configuration) -> f64 {
    allowed as f64 / (2 * config.geometry().edge_count()) as f64
}

/// Conductivity from realised crossings: jumps per edge per unit time,
/// halved to match [`sigma_from_jumps`].
pub fn sigma_from_crossings(jumps: u64, elapsed: f64, config: &Configuration) -> f64 {
    jumps as f64 / (elapsed * 2.0 * config.geometry().edge_count() as f64)
}

/// `a ≤ (2d-1)·ρ_a`: every active particle has an occupied neighbour, so at
/// most `2d-1` of its neighbours are empty.
pub fn activity_bound_holds(config: &Configuration, allowed: usize) -> bool {
    let d = config.geometry().dim();
    allowed <= (2 * d - 1) * config.active_count()
}

/// One time-stamped bundle of scalar observables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableRecord {
    pub t: f64,
    pub rho: f64,
    pub rho_a: f64,
    pub activity: f64,
    pub sigma_hat: f64,
    pub box_variances: BTreeMap<usize, f64>,
    pub absorbed: bool,
}

impl ObservableRecord {
    pub fn from_state(state: &SimulationState) -> Self {
        let c = state.config();
        let allowed = state.edges().len();
        ObservableRecord {
            t: state.time(),
            rho: c.density(),
            rho_a: measure_rho_a(c),
            activity: allowed as f64 / c.geometry().volume() as f64,
            sigma_hat: sigma_from_jumps(allowed, c),
            box_variances: BTreeMap::new(),
            absorbed: state.is_absorbed(),
        }
    }
}

/// Time averages with batch-means errors over a series of records.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarSummary {
    pub rho: Estimate,
    pub rho_a: Estimate,
    pub activity: Estimate,
    pub sigma_hat: Estimate,
    pub samples: usize,
}

pub fn summarize(records: &[ObservableRecord], batches: usize) -> ScalarSummary {
    let col = |f: fn(&ObservableRecord) -> f64| -> Estimate {
        let xs: Vec<f64> = records.iter().map(f).collect();
        crate::stats::batch_means(&xs, batches)
    };
    ScalarSummary {
        rho: col(|r| r.rho),
        rho_a: col(|r| r.rho_a),
        activity: col(|r| r.activity),
        sigma_hat: col(|r| r.sigma_hat),
        samples: records.len(),
    }
}
