use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, QuasiConfig};
use super::output::{est_cells, num, write_csv, write_json};
use crate::dynamics::{initial_condition, quasi_stationary_run, InitialKind, QuasiProtocol};
use crate::error::{ClgError, Result};
use crate::lattice::{BoundaryMode, Geometry};
use crate::observables::{measure_activity, measure_rho_a, soc_spread_run, SocResult};
use crate::stats::{batch_means, mean, mean_stderr, Estimate};

/// Replica block for the quasi-stationary runs, disjoint from the spreading
/// replicas under the same root seed.
const QUASI_BLOCK: u64 = 3 << 40;
const QUASI_BATCHES: usize = 10;

/// Quasi-stationary observables just above the measured critical density.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuasiPoint {
    pub offset: f64,
    pub rho: f64,
    pub particles: usize,
    pub rho_a: Estimate,
    pub activity: Estimate,
    /// `â/ρ̂_a`, averaged over replicas (or over windows for a single one).
    pub ratio: Estimate,
    pub restarts: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SocReport {
    pub spread: SocResult,
    pub accepted: usize,
    pub quasi_side: Option<usize>,
    pub quasi: Vec<QuasiPoint>,
}

fn quasi_point(dim: usize, q: &QuasiConfig, rho: f64, offset: f64, root: u64, first: u64) -> Result<QuasiPoint> {
    let g = Arc::new(Geometry::new(dim, q.side, BoundaryMode::Periodic)?);
    let n = (rho * g.volume() as f64).round() as usize;
    let protocol = QuasiProtocol {
        burn_in_factor: q.burn_in_factor,
        windows: q.windows,
        window_time: q.window_time,
        max_restarts: q.max_restarts,
    };
    let runs: Vec<_> = (0..q.replicas)
        .into_par_iter()
        .map(|b| {
            quasi_stationary_run(
                |r| initial_condition(&InitialKind::UniformN { n }, g.clone(), r),
                &protocol,
                root,
                first + b,
                |s| (measure_rho_a(s.config()), measure_activity(s.config())),
            )
        })
        .collect::<Result<_>>()
        .map_err(|e| ClgError::Insufficient(format!("quasi-stationary run at rho = {rho} (seed {root}): {e}")))?;
    let per_rep = |f: fn(&(f64, f64)) -> f64| -> Vec<f64> {
        runs.iter().map(|r| mean(&r.samples.iter().map(f).collect::<Vec<_>>())).collect()
    };
    let (ra, act) = (per_rep(|x| x.0), per_rep(|x| x.1));
    let ratios: Vec<f64> = ra.iter().zip(&act).map(|(r, a)| a / r).collect();
    // Replicas are independent; a single replica falls back to batch means
    // over its windows.
    let spread = |xs: &[f64], window: fn(&(f64, f64)) -> f64| {
        if xs.len() >= 2 {
            mean_stderr(xs)
        } else {
            let series: Vec<f64> = runs[0].samples.iter().map(window).collect();
            Estimate::new(xs[0], batch_means(&series, QUASI_BATCHES).stderr)
        }
    };
    Ok(QuasiPoint {
        offset,
        rho,
        particles: n,
        rho_a: spread(&ra, |x| x.0),
        activity: spread(&act, |x| x.1),
        ratio: spread(&ratios, |x| x.1 / x.0),
        restarts: runs.iter().map(|r| r.restarts.len()).sum(),
    })
}

pub fn compute(cfg: &ExperimentConfig) -> Result<SocReport> {
    let geometry = Arc::new(cfg.geometry()?);
    let s = cfg.require(&cfg.soc, "soc")?.clone();
    let outcomes: Vec<_> = (0..cfg.replicas)
        .into_par_iter()
        .map(|r| soc_spread_run(&geometry, s.block, cfg.seed, r, s.event_cap))
        .collect::<Result<_>>()?;
    let spread = SocResult::from_runs(geometry.dim(), s.block, outcomes);
    let accepted = spread.runs.iter().filter(|r| r.inner_density.is_some()).count();
    let mut quasi = Vec::new();
    if let Some(q) = &s.quasi {
        let rho_c = spread
            .pooled
            .ok_or_else(|| ClgError::insufficient("no accepted spreading run, so no critical density to offset from"))?
            .value;
        for (j, &off) in q.offsets.iter().enumerate() {
            let first = QUASI_BLOCK + j as u64 * q.replicas;
            quasi.push(quasi_point(geometry.dim(), q, rho_c + off, off, cfg.seed, first)?);
        }
    }
    Ok(SocReport { spread, accepted, quasi_side: s.quasi.as_ref().map(|q| q.side), quasi })
}

pub const SOC_HEADER: &[&str] =
    &["replica", "events", "time", "absorbed", "touched_edge", "inner_particles", "inner_density"];
pub const QUASI_HEADER: &[&str] = &[
    "offset", "rho", "n", "rhoA", "rhoA_err", "activity", "activity_err", "ratio", "ratio_err", "restarts",
];

pub fn write(report: &SocReport, dir: &Path) -> Result<Vec<String>> {
    let rows = report.spread.runs.iter().map(|r| {
        vec![
            r.replica.to_string(),
            r.events.to_string(),
            num(r.time),
            r.absorbed.to_string(),
            r.touched_edge.to_string(),
            r.inner_particles.to_string(),
            r.inner_density.map(num).unwrap_or_default(),
        ]
    });
    write_csv(&dir.join("soc.csv"), SOC_HEADER, rows)?;
    let mut files = vec!["soc.csv".to_string()];
    if !report.quasi.is_empty() {
        let rows = report.quasi.iter().map(|p| {
            let mut row = vec![num(p.offset), num(p.rho), p.particles.to_string()];
            for e in [p.rho_a, p.activity, p.ratio] {
                row.extend(est_cells(Some(e)));
            }
            row.push(p.restarts.to_string());
            row
        });
        write_csv(&dir.join("quasi.csv"), QUASI_HEADER, rows)?;
        files.push("quasi.csv".into());
    }
    write_json(&dir.join("soc.json"), report)?;
    files.push("soc.json".into());
    Ok(files)
}
