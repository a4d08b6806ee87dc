use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use super::rng::SimRng;
use crate::error::{ClgError, Result};
use crate::lattice::{ActiveEdgeSet, Configuration, Geometry};

/// Reservoir densities `α(i)` on the boundary sites `∂Λ_L`, stored in the
/// order of [`Geometry::boundary_sites`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundarySpec {
    alpha: Vec<f64>,
}

impl BoundarySpec {
    pub fn new(geometry: &Geometry, alpha: Vec<f64>) -> Result<Self> {
        if geometry.mode().is_periodic() {
            return Err(ClgError::usage("a periodic lattice has no boundary"));
        }
        if alpha.len() != geometry.boundary_sites().len() {
            return Err(ClgError::usage(format!(
                "boundary spec has {} values, lattice has {} boundary sites",
                alpha.len(),
                geometry.boundary_sites().len()
            )));
        }
        if let Some(a) = alpha.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
            return Err(ClgError::usage(format!("reservoir density {a} not in (0,1)")));
        }
        Ok(BoundarySpec { alpha })
    }

    /// `α(i) = f(coords)` for every boundary site (1-based coordinates).
    pub fn from_fn(geometry: &Geometry, f: impl Fn(&[usize]) -> f64) -> Result<Self> {
        let alpha = geometry
            .boundary_sites()
            .iter()
            .map(|&s| f(&geometry.coords_of(s)))
            .collect();
        Self::new(geometry, alpha)
    }

    pub fn constant(geometry: &Geometry, value: f64) -> Result<Self> {
        Self::from_fn(geometry, |_| value)
    }

    /// `α_ℓ` on the face `i_1 = 1`, `α_r` on the face `i_1 = L`. On an open box
    /// the remaining faces interpolate linearly in `i_1` between the two.
    pub fn left_right(geometry: &Geometry, left: f64, right: f64) -> Result<Self> {
        let l = geometry.side() as f64;
        Self::from_fn(geometry, |c| match c[0] {
            1 => left,
            x if x == geometry.side() => right,
            x => left + (right - left) * x as f64 / (l + 1.0),
        })
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    /// Same spec with the two axis-1 faces exchanged.
    pub fn mirrored(&self, geometry: &Geometry) -> Result<Self> {
        let sites = geometry.boundary_sites();
        let alpha = sites
            .iter()
            .map(|&s| {
                let mut c = geometry.coords_of(s);
                c[0] = geometry.side() + 1 - c[0];
                let t = geometry.index_of(&c).expect("in range");
                let k = sites.binary_search(&t).expect("mirror image is a boundary site");
                self.alpha[k]
            })
            .collect();
        Self::new(geometry, alpha)
    }
}

/// Signed particle counts through the two axis-1 faces.
///
/// Both counters measure flow in the `-e_1` direction (right to left):
/// `left` increases when a particle leaves through the face `i_1 = 1` and
/// decreases when one enters there; `right` increases when a particle enters
/// through `i_1 = L` and decreases when one leaves there.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaceCounts {
    pub left: i64,
    pub right: i64,
}

#[derive(Debug, Clone)]
struct Reservoir {
    spec: BoundarySpec,
    faces: FaceCounts,
}

/// One executed event.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Event {
    Jump { from: usize, to: usize },
    Resample { site: usize, value: bool, changed: bool },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOutcome {
    Event(Event),
    /// Total rate is zero; nothing can happen any more.
    Absorbed,
}

/// Stop rule for [`SimulationState::run_until`]; the first satisfied
/// condition wins.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StopCondition {
    pub time: Option<f64>,
    pub events: Option<u64>,
    /// Only meaningful as a sole condition; absorption always stops a run.
    pub absorption: bool,
}

impl StopCondition {
    pub fn at_time(t: f64) -> Self {
        StopCondition { time: Some(t), ..Default::default() }
    }

    pub fn after_events(n: u64) -> Self {
        StopCondition { events: Some(n), ..Default::default() }
    }

    pub fn at_absorption() -> Self {
        StopCondition { absorption: true, ..Default::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Time,
    Events,
    Absorbed,
}

/// Continuous-time CLG state: configuration, allowed jumps, clock and stream.
#[derive(Debug, Clone)]
pub struct SimulationState {
    pub(crate) config: Configuration,
    pub(crate) edges: ActiveEdgeSet,
    pub(crate) time: f64,
    pub(crate) events: u64,
    pub(crate) rng: SimRng,
    reservoir: Option<Reservoir>,
    /// Net jumps in the `+e_1` direction across the cut between planes
    /// `k` and `k+1` (index `L-1` is the periodic wrap cut).
    pub(crate) axis1_flow: Vec<i64>,
    pub(crate) jumps: u64,
}

impl SimulationState {
    /// Bulk dynamics on a periodic lattice.
    pub fn new(config: Configuration, rng: SimRng) -> Result<Self> {
        if !config.geometry().mode().is_periodic() {
            return Err(ClgError::usage(
                "open and cylinder lattices need reservoirs: use SimulationState::with_reservoirs",
            ));
        }
        Ok(Self::build(config, rng, None))
    }

    /// Bulk dynamics plus Bernoulli resampling at rate 1 on every boundary site.
    pub fn with_reservoirs(config: Configuration, spec: BoundarySpec, rng: SimRng) -> Result<Self> {
        let g = config.geometry();
        if g.mode().is_periodic() {
            return Err(ClgError::usage("reservoirs require an open or cylinder lattice"));
        }
        if spec.alpha.len() != g.boundary_sites().len() {
            return Err(ClgError::usage("boundary spec does not match the lattice"));
        }
        Ok(Self::build(
            config,
            rng,
            Some(Reservoir { spec, faces: FaceCounts::default() }),
        ))
    }

    fn build(config: Configuration, rng: SimRng, reservoir: Option<Reservoir>) -> Self {
        let edges = ActiveEdgeSet::from_configuration(&config);
        let side = config.geometry().side();
        SimulationState {
            config,
            edges,
            time: 0.0,
            events: 0,
            rng,
            reservoir,
            axis1_flow: vec![0; side],
            jumps: 0,
        }
    }

    pub(crate) fn restore(
        config: Configuration,
        edges: ActiveEdgeSet,
        time: f64,
        events: u64,
        rng: SimRng,
        spec: Option<(BoundarySpec, FaceCounts)>,
        axis1_flow: Vec<i64>,
        jumps: u64,
    ) -> Self {
        SimulationState {
            config,
            edges,
            time,
            events,
            rng,
            reservoir: spec.map(|(spec, faces)| Reservoir { spec, faces }),
            axis1_flow,
            jumps,
        }
    }

    pub fn config(&self) -> &Configuration {
        &self.config
    }

    pub fn edges(&self) -> &ActiveEdgeSet {
        &self.edges
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn event_count(&self) -> u64 {
        self.events
    }

    /// Number of executed jumps (boundary resamplings excluded).
    pub fn jump_count(&self) -> u64 {
        self.jumps
    }

    pub fn rng(&self) -> &SimRng {
        &self.rng
    }

    pub fn boundary_spec(&self) -> Option<&BoundarySpec> {
        self.reservoir.as_ref().map(|r| &r.spec)
    }

    pub fn face_counts(&self) -> FaceCounts {
        self.reservoir.as_ref().map(|r| r.faces).unwrap_or_default()
    }

    pub fn axis1_flow(&self) -> &[i64] {
        &self.axis1_flow
    }

    /// Total event rate `R = 𝔞̃ + |∂Λ_L|` (the second term only with reservoirs).
    pub fn total_rate(&self) -> usize {
        self.edges.len() + self.boundary_event_count()
    }

    fn boundary_event_count(&self) -> usize {
        if self.reservoir.is_some() {
            self.config.geometry().boundary_sites().len()
        } else {
            0
        }
    }

    pub fn is_absorbed(&self) -> bool {
        self.total_rate() == 0
    }

    /// One step of the exact continuous-time dynamics.
    pub fn step(&mut self) -> StepOutcome {
        let rate = self.total_rate();
        if rate == 0 {
            return StepOutcome::Absorbed;
        }
        let wait: f64 = self.rng.sample::<f64, _>(Exp1) / rate as f64;
        self.time += wait;
        StepOutcome::Event(self.fire(rate))
    }

    /// Chooses and executes an event without advancing the clock.
    fn fire(&mut self, rate: usize) -> Event {
        self.events += 1;
        let k = self.rng.random_range(0..rate);
        let n_jumps = self.edges.len();
        if k < n_jumps {
            let (from, dir) = self.edges.get(k);
            let to = self.config.apply_jump_dir(&mut self.edges, from, dir);
            self.jumps += 1;
            if dir < 2 {
                let g = self.config.geometry();
                let c = g.first_coord(from);
                let side = g.side();
                if dir == 1 {
                    self.axis1_flow[c] += 1;
                } else {
                    self.axis1_flow[(c + side - 1) % side] -= 1;
                }
            }
            Event::Jump { from, to }
        } else {
            let b = k - n_jumps;
            let res = self.reservoir.as_mut().expect("boundary event without reservoir");
            let g = self.config.geometry();
            let site = g.boundary_sites()[b];
            let value = self.rng.random_bool(res.spec.alpha[b]);
            let first = g.first_coord(site);
            let last = g.side() - 1;
            let changed = self.config.set_site(&mut self.edges, site, value);
            if changed {
                let sign = if value { 1 } else { -1 };
                if first == 0 {
                    res.faces.left -= sign;
                }
                if first == last {
                    res.faces.right += sign;
                }
            }
            Event::Resample { site, value, changed }
        }
    }

    /// Advances until the first satisfied stop condition. Stopping at a time
    /// `T` discards the pending waiting time, which is exact by memorylessness.
    pub fn run_until(&mut self, stop: StopCondition) -> StopReason {
        self.run_until_with(stop, |_, _| {})
    }

    /// Like [`run_until`](Self::run_until), calling `observer` after every event.
    pub fn run_until_with<F>(&mut self, stop: StopCondition, mut observer: F) -> StopReason
    where
        F: FnMut(&SimulationState, Event),
    {
        let start_events = self.events;
        loop {
            if let Some(n) = stop.events {
                if self.events - start_events >= n {
                    return StopReason::Events;
                }
            }
            let rate = self.total_rate();
            if rate == 0 {
                return StopReason::Absorbed;
            }
            let wait: f64 = self.rng.sample::<f64, _>(Exp1) / rate as f64;
            if let Some(t) = stop.time {
                if self.time + wait > t {
                    self.time = self.time.max(t);
                    return StopReason::Time;
                }
            }
            self.time += wait;
            let ev = self.fire(rate);
            observer(self, ev);
        }
    }
}
