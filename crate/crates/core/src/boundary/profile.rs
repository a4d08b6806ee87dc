use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::current::{pooled_rate, CurrentLedger};
use crate::dynamics::{derive_rng, initial_condition, BoundarySpec, Event, InitialKind, SimulationState, StopCondition, StreamPurpose};
use crate::error::{ClgError, Result};
use crate::lattice::Geometry;
use crate::stats::{mean, mean_stderr, Estimate};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileProtocol {
    pub burn_in: f64,
    pub windows: usize,
    pub window_time: f64,
    pub replicas: u64,
}

/// Time-averaged active density of a boundary-driven system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryProfile {
    pub dim: usize,
    pub side: usize,
    pub protocol: ProfileProtocol,
    /// `ρ̂_a(i)` per site; errors from the spread of window averages.
    pub sites: Vec<Estimate>,
    /// Averages over the hyperplanes `i_1 = k`, `k = 1..L`.
    pub planes: Vec<Estimate>,
    /// Net `+e_1` jump rate per edge across the cut between planes `k` and
    /// `k+1`, for `k = 1..L-1`.
    pub cuts: Vec<Estimate>,
    /// Face ledgers sampled at window ends, one per replica.
    pub ledgers: Vec<CurrentLedger>,
    /// Largest |z| between first-half and second-half plane averages.
    pub drift_z: f64,
    pub events: u64,
}

impl StationaryProfile {
    pub fn current_left(&self) -> Option<Estimate> {
        pooled_rate(&self.ledgers, false)
    }

    pub fn current_right(&self) -> Option<Estimate> {
        pooled_rate(&self.ledgers, true)
    }

    /// Largest `|ρ̂ - ref| / stderr` over planes.
    pub fn plane_max_z(&self, reference: &[f64]) -> f64 {
        self.planes
            .iter()
            .zip(reference)
            .map(|(e, r)| e.z_score(*r).abs())
            .fold(0.0, f64::max)
    }

    /// Largest `|cut current - (ρ̂_a(k) - ρ̂_a(k+1))|` in units of the
    /// combined error. The discrete gradient condition makes these equal in
    /// expectation.
    pub fn cut_consistency_z(&self) -> f64 {
        self.cuts
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let grad = self.planes[k].value - self.planes[k + 1].value;
                let se = (c.stderr.powi(2) + self.planes[k].stderr.powi(2) + self.planes[k + 1].stderr.powi(2)).sqrt();
                (c.value - grad).abs() / se
            })
            .fold(0.0, f64::max)
    }
}

/// Sites whose activity may change when `site` changes occupancy.
fn touch(g: &Geometry, site: usize, out: &mut Vec<usize>) {
    out.push(site);
    out.extend((0..g.degree()).filter_map(|d| g.neighbor(site, d)));
}

/// Runs the reservoir dynamics from a Bernoulli start at the mean reservoir
/// density, discards `burn_in`, then integrates every `A_i(t)` exactly over
/// `windows` consecutive windows.
pub fn measure_stationary_profile(
    geometry: Arc<Geometry>,
    spec: &BoundarySpec,
    protocol: ProfileProtocol,
    root: u64,
) -> Result<StationaryProfile> {
    if protocol.windows < 4 || protocol.replicas == 0 || !(protocol.window_time > 0.0) {
        return Err(ClgError::usage("profile needs at least 4 windows, one replica and a positive window time"));
    }
    let g = geometry.clone();
    let v = g.volume();
    let side = g.side();
    let plane = g.plane_size();
    let rho0 = mean(spec.alpha());
    let mut windows_sites: Vec<Vec<f64>> = vec![Vec::new(); v];
    let mut windows_planes: Vec<Vec<f64>> = vec![Vec::new(); side];
    let mut windows_cuts: Vec<Vec<f64>> = vec![Vec::new(); side.saturating_sub(1)];
    let mut ledgers = Vec::new();
    let mut events = 0;

    for replica in 0..protocol.replicas {
        let mut init_rng = derive_rng(root, replica, StreamPurpose::Initial);
        let c = initial_condition(&InitialKind::Bernoulli { rho: rho0 }, geometry.clone(), &mut init_rng)?;
        let mut state = SimulationState::with_reservoirs(c, spec.clone(), derive_rng(root, replica, StreamPurpose::Dynamics))?;
        state.run_until(StopCondition::at_time(protocol.burn_in));

        let mut ledger = CurrentLedger::default();
        ledger.record(state.time(), state.face_counts());
        let mut cur: Vec<u8> = (0..v).map(|s| state.config().is_active(s) as u8).collect();
        let mut last = vec![state.time(); v];
        let mut integral = vec![0.0; v];
        let mut scratch = Vec::new();
        for w in 0..protocol.windows {
            let t0 = protocol.burn_in + w as f64 * protocol.window_time;
            let t1 = t0 + protocol.window_time;
            let flow0 = state.axis1_flow().to_vec();
            state.run_until_with(StopCondition::at_time(t1), |s, ev| {
                scratch.clear();
                match ev {
                    Event::Jump { from, to } => {
                        touch(&g, from, &mut scratch);
                        touch(&g, to, &mut scratch);
                    }
                    Event::Resample { site, changed: true, .. } => touch(&g, site, &mut scratch),
                    Event::Resample { .. } => {}
                }
                let t = s.time();
                for &i in &scratch {
                    let a = s.config().is_active(i) as u8;
                    if a != cur[i] {
                        integral[i] += cur[i] as f64 * (t - last[i]);
                        last[i] = t;
                        cur[i] = a;
                    }
                }
            });
            for i in 0..v {
                integral[i] += cur[i] as f64 * (t1 - last[i]);
                last[i] = t1;
            }
            let avg: Vec<f64> = integral.iter().map(|x| x / protocol.window_time).collect();
            for k in 0..side {
                windows_planes[k].push(mean(&avg[k * plane..(k + 1) * plane]));
            }
            for (i, a) in avg.into_iter().enumerate() {
                windows_sites[i].push(a);
            }
            for (k, cut) in windows_cuts.iter_mut().enumerate() {
                let dj = state.axis1_flow()[k] - flow0[k];
                cut.push(dj as f64 / (protocol.window_time * plane as f64));
            }
            integral.iter_mut().for_each(|x| *x = 0.0);
            ledger.record(state.time(), state.face_counts());
        }
        events += state.event_count();
        ledgers.push(ledger);
    }

    let half = protocol.windows / 2;
    let drift_z = windows_planes
        .iter()
        .map(|series| {
            // Halves taken within each replica.
            let (mut a, mut b) = (Vec::new(), Vec::new());
            for chunk in series.chunks(protocol.windows) {
                a.extend_from_slice(&chunk[..half]);
                b.extend_from_slice(&chunk[half..]);
            }
            let (ea, eb) = (mean_stderr(&a), mean_stderr(&b));
            let se = (ea.stderr.powi(2) + eb.stderr.powi(2)).sqrt();
            if se > 0.0 { (ea.value - eb.value).abs() / se } else { 0.0 }
        })
        .fold(0.0, f64::max);

    Ok(StationaryProfile {
        dim: g.dim(),
        side,
        protocol,
        sites: windows_sites.iter().map(|w| mean_stderr(w)).collect(),
        planes: windows_planes.iter().map(|w| mean_stderr(w)).collect(),
        cuts: windows_cuts.iter().map(|w| mean_stderr(w)).collect(),
        ledgers,
        drift_z,
        events,
    })
}
