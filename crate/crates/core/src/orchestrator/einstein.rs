use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{EinsteinConfig, ExperimentConfig};
use super::output::{num, write_csv, write_json};
use crate::dynamics::{derive_rng, initial_condition, InitialKind, SimulationState, StopCondition, StreamPurpose};
use crate::error::Result;
use crate::exact1d::exact_observables;
use crate::lattice::Geometry;
use crate::observables::{plane_sums, psi_hat, EinsteinAccumulator, EinsteinResult};

/// Snapshots per replica kept in memory for the full `ψ̂(t, i_1)` table.
const PSI_SNAPSHOTS: usize = 100;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EinsteinReport {
    pub initial: InitialKind,
    pub replicas: u64,
    pub result: EinsteinResult,
    /// `2·χ·D` from the one-dimensional closed forms at the initial density,
    /// which is what the lattice identity predicts for the slope.
    pub closed_form_slope: Option<f64>,
    /// `ψ̂(t, i_1)` for `t = 0..max_lag` spacings and `|i_1| ≤ cutoff`, from the
    /// first snapshots of replica 0.
    pub psi: Vec<Vec<f64>>,
}

fn replica(
    geometry: &Arc<Geometry>,
    initial: &InitialKind,
    root: u64,
    r: u64,
    burn_in: u64,
    e: &EinsteinConfig,
) -> Result<(EinsteinAccumulator, Vec<Vec<i64>>)> {
    let mut init_rng = derive_rng(root, r, StreamPurpose::Initial);
    let c = initial_condition(initial, geometry.clone(), &mut init_rng)?;
    let mut state = SimulationState::new(c, derive_rng(root, r, StreamPurpose::Dynamics))?;
    state.run_until(StopCondition::after_events(burn_in));
    let mut acc = EinsteinAccumulator::new(geometry.volume(), e.spacing, e.max_lag, e.origin_every, e.cutoff)?;
    let steps = (e.duration / e.spacing).floor() as usize;
    let t0 = state.time();
    let mut kept = Vec::new();
    for k in 0..=steps {
        state.run_until(StopCondition::at_time(t0 + k as f64 * e.spacing));
        let planes = plane_sums(state.config());
        if r == 0 && kept.len() < PSI_SNAPSHOTS {
            kept.push(planes.clone());
        }
        acc.push(planes)?;
    }
    Ok((acc, kept))
}

pub fn compute(cfg: &ExperimentConfig) -> Result<EinsteinReport> {
    let geometry = Arc::new(cfg.geometry()?);
    let initial = *cfg.require(&cfg.initial, "initial")?;
    let e = *cfg.require(&cfg.einstein, "einstein")?;
    let burn = cfg.run.and_then(|r| r.burn_in_events).unwrap_or(10 * geometry.volume() as u64);
    let parts: Vec<_> = (0..cfg.replicas)
        .into_par_iter()
        .map(|r| replica(&geometry, &initial, cfg.seed, r, burn, &e))
        .collect::<Result<_>>()?;
    let mut iter = parts.into_iter();
    let (mut acc, kept) = iter.next().expect("at least one replica");
    for (other, _) in iter {
        acc.merge(other)?;
    }
    let batches = cfg.run.map_or(20, |r| r.batches);
    let result = acc.finish(e.window, batches)?;
    let plane = geometry.plane_size();
    let lags = e.max_lag.min(kept.len().saturating_sub(1));
    let psi = psi_hat(&kept, plane, lags, e.cutoff)?;
    let rho = match initial {
        InitialKind::Canonical1d { n } | InitialKind::UniformN { n } => n as f64 / geometry.volume() as f64,
        InitialKind::GrandCanonical1d { rho } | InitialKind::Bernoulli { rho } => rho,
        _ => f64::NAN,
    };
    let closed_form_slope = (geometry.dim() == 1)
        .then(|| exact_observables(rho).ok())
        .flatten()
        .map(|x| 2.0 * x.compressibility * x.diffusion);
    Ok(EinsteinReport { initial, replicas: cfg.replicas, result, closed_form_slope, psi })
}

pub const PSI_HEADER: &[&str] = &["t", "i1", "psi"];

pub fn write(report: &EinsteinReport, spacing: f64, cutoff: usize, dir: &Path) -> Result<Vec<String>> {
    let rows = report.psi.iter().enumerate().flat_map(|(lag, row)| {
        row.iter().enumerate().map(move |(k, v)| {
            vec![num(lag as f64 * spacing), (k as i64 - cutoff as i64).to_string(), num(*v)]
        })
    });
    write_csv(&dir.join("psi.csv"), PSI_HEADER, rows)?;
    write_json(&dir.join("einstein.json"), report)?;
    Ok(vec!["psi.csv".into(), "einstein.json".into()])
}
