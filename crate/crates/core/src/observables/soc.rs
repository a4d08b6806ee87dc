use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dynamics::{derive_rng, initial_condition, InitialKind, SimulationState, StepOutcome, StreamPurpose, Event};
use crate::error::{ClgError, Result};
use crate::lattice::{Configuration, Geometry};
use crate::stats::{mean_stderr, Estimate};

/// Inner windows with fewer sites than this are flagged as too small.
pub const MIN_WINDOW_SITES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SocRun {
    pub replica: u64,
    pub events: u64,
    pub time: f64,
    pub absorbed: bool,
    /// A particle reached the outermost layer of the box before freezing.
    pub touched_edge: bool,
    pub inner_particles: usize,
    /// Density in the central window; `None` for rejected or capped runs.
    pub inner_density: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SocResult {
    pub block: usize,
    pub window: usize,
    pub small_window: bool,
    pub runs: Vec<SocRun>,
    /// Mean inner density over accepted runs with its standard error.
    pub pooled: Option<Estimate>,
    #[serde(skip)]
    pub frozen: Vec<Configuration>,
}

fn on_edge(g: &Geometry, site: usize) -> bool {
    (0..g.dim()).any(|a| {
        let c = g.coord(site, a);
        c == 0 || c + 1 == g.side()
    })
}

/// Side of the central measurement window for a block of side `m`.
pub fn soc_window(m: usize) -> usize {
    (m / 2).max(1)
}

/// One replica of the spreading experiment: a fully occupied centred block
/// of side `m` on an otherwise empty torus runs until it freezes. The run is
/// rejected when a particle reaches the outer layer of the box or when
/// `event_cap` is hit. Returns the frozen state of accepted runs.
pub fn soc_spread_run(
    geometry: &Arc<Geometry>,
    m: usize,
    root: u64,
    replica: u64,
    event_cap: u64,
) -> Result<(SocRun, Option<Configuration>)> {
    if !geometry.mode().is_periodic() {
        return Err(ClgError::usage("the spreading experiment runs on a periodic box"));
    }
    let window = soc_window(m);
    let lo = (geometry.side() - window) / 2;
    let inside = |s: usize| (0..geometry.dim()).all(|a| (lo..lo + window).contains(&geometry.coord(s, a)));
    let mut init_rng = derive_rng(root, replica, StreamPurpose::Initial);
    let c = initial_condition(&InitialKind::CenteredBlock { m }, geometry.clone(), &mut init_rng)?;
    let mut state = SimulationState::new(c, derive_rng(root, replica, StreamPurpose::Dynamics))?;
    let mut touched = false;
    let mut absorbed = false;
    while state.event_count() < event_cap {
        match state.step() {
            StepOutcome::Absorbed => {
                absorbed = true;
                break;
            }
            StepOutcome::Event(Event::Jump { to, .. }) => {
                if on_edge(geometry, to) {
                    touched = true;
                    break;
                }
            }
            StepOutcome::Event(_) => {}
        }
    }
    let inner_particles = (0..geometry.volume()).filter(|&s| inside(s) && state.config().is_occupied(s)).count();
    let ok = absorbed && !touched;
    let inner_density = ok.then(|| inner_particles as f64 / window.pow(geometry.dim() as u32) as f64);
    let run = SocRun {
        replica,
        events: state.event_count(),
        time: state.time(),
        absorbed,
        touched_edge: touched,
        inner_particles,
        inner_density,
    };
    Ok((run, ok.then(|| state.config().clone())))
}

impl SocResult {
    /// Pools replica outcomes in the given order.
    pub fn from_runs(dim: usize, m: usize, outcomes: Vec<(SocRun, Option<Configuration>)>) -> Self {
        let window = soc_window(m);
        let accepted: Vec<f64> = outcomes.iter().filter_map(|(r, _)| r.inner_density).collect();
        let pooled = (!accepted.is_empty()).then(|| {
            let e = mean_stderr(&accepted);
            if accepted.len() < 2 { Estimate::new(e.value, f64::NAN) } else { e }
        });
        let (runs, frozen): (Vec<SocRun>, Vec<Option<Configuration>>) = outcomes.into_iter().unzip();
        SocResult {
            block: m,
            window,
            small_window: window.pow(dim as u32) < MIN_WINDOW_SITES,
            runs,
            pooled,
            frozen: frozen.into_iter().flatten().collect(),
        }
    }
}

/// Runs replicas `0..replicas` of [`soc_spread_run`] and pools the accepted
/// inner densities.
pub fn soc_spread_experiment(
    geometry: Arc<Geometry>,
    m: usize,
    root: u64,
    replicas: u64,
    event_cap: u64,
) -> Result<SocResult> {
    let outcomes = (0..replicas)
        .map(|r| soc_spread_run(&geometry, m, root, r, event_cap))
        .collect::<Result<Vec<_>>>()?;
    Ok(SocResult::from_runs(geometry.dim(), m, outcomes))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_spread_freezes_near_half() {
        let g = Arc::new(Geometry::periodic(1, 512).unwrap());
        let res = soc_spread_experiment(g, 64, 3, 6, 10_000_000).unwrap();
        for r in &res.runs {
            assert!(r.absorbed && !r.touched_edge, "{r:?}");
        }
        // A frozen one-dimensional state has no two adjacent particles, and
        // inside the block there are no two adjacent holes either.
        let p = res.pooled.unwrap();
        assert!((p.value - 0.5).abs() < 0.07, "{p:?}");
        assert!(!res.small_window);
    }

    #[test]
    fn single_pair_is_degenerate_but_freezes() {
        let g = Arc::new(Geometry::periodic(2, 16).unwrap());
        let res = soc_spread_experiment(g, 2, 1, 3, 1_000_000).unwrap();
        assert!(res.small_window);
        assert!(res.runs.iter().all(|r| r.absorbed));
    }

    #[test]
    fn edge_contact_rejects_the_run() {
        let g = Arc::new(Geometry::periodic(1, 12).unwrap());
        let res = soc_spread_experiment(g, 10, 0, 4, 1_000_000).unwrap();
        assert!(res.runs.iter().any(|r| r.touched_edge));
        assert!(res.runs.iter().filter(|r| r.touched_edge).all(|r| r.inner_density.is_none()));
    }
}
