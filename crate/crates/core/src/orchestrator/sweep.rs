use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, LadderConfig, ZetaConfig};
use super::output::{est_cells, num, write_csv, write_json, TaskCache};
use super::stationary::{analyse, measure_replica, ReplicaMeasurement};
use crate::dynamics::{
    absorption_run, derive_rng, initial_condition, AbsorptionSample, InitialKind, SimulationState, StopCondition,
    StreamPurpose,
};
use crate::error::{ClgError, Result};
use crate::exponents::{
    crossover_size, log_log_fit_weighted, numerical_d, relation_check, CrossoverEstimate, ExponentSet, LadderPoint,
    PowerLawFit, RelationReport,
};
use crate::lattice::{BoundaryMode, Geometry};
use crate::observables::{hyperuniformity_exponent, BoxPlacement, BoxVarianceEstimator, Hyperuniformity};
use crate::stats::Estimate;

/// Replica ids are split into blocks so that measurement, ladder and
/// critical-state streams never overlap under one root seed.
const LADDER_BLOCK: u64 = 1 << 40;
const ZETA_BLOCK: u64 = 2 << 40;

/// Aggregated observables at one density.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepPoint {
    pub rho: f64,
    pub u: f64,
    pub particles: usize,
    pub rho_a: Estimate,
    pub activity: Estimate,
    pub sigma: Estimate,
    pub chi: Option<Estimate>,
    pub chi_corr: Option<Estimate>,
    pub xi_cross: Option<Estimate>,
    pub ladder: Vec<LadderPoint>,
    pub crossover: Option<CrossoverEstimate>,
    pub absorbed_snapshots: usize,
    pub samples: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ZetaMeasurement {
    pub side: usize,
    pub samples: u64,
    pub absorbed: u64,
    pub result: Option<Hyperuniformity>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepReport {
    pub dim: usize,
    pub side: usize,
    pub seed: u64,
    pub replicas: u64,
    pub rho_c: f64,
    pub fit_window: (f64, f64),
    pub points: Vec<SweepPoint>,
    pub exponents: ExponentSet,
    pub fits: BTreeMap<String, PowerLawFit>,
    /// Why an exponent is absent.
    pub fit_errors: BTreeMap<String, String>,
    pub diffusion: Vec<(f64, Estimate)>,
    pub zeta: Option<ZetaMeasurement>,
    pub relations: RelationReport,
}

fn particles(rho: f64, volume: usize) -> usize {
    (rho * volume as f64).round() as usize
}

fn sweep_initial(dim: usize, n: usize) -> InitialKind {
    if dim == 1 {
        InitialKind::Canonical1d { n }
    } else {
        InitialKind::UniformN { n }
    }
}

/// Absorption runs from stationary windows on rings of one side length.
pub fn ladder_point(rho: f64, side: usize, ladder: &LadderConfig, root: u64, first_replica: u64) -> Result<LadderPoint> {
    let g = Arc::new(Geometry::periodic(1, side)?);
    let cap = StopCondition::at_time(ladder.time_factor * (side * side) as f64);
    let mut absorbed = 0;
    for s in 0..ladder.samples as u64 {
        let id = first_replica + s;
        let mut init_rng = derive_rng(root, id, StreamPurpose::Initial);
        let c = initial_condition(&InitialKind::StationaryWindow1d { rho }, g.clone(), &mut init_rng)?;
        let state = SimulationState::new(c, derive_rng(root, id, StreamPurpose::Dynamics))?;
        let sample: AbsorptionSample = absorption_run(state, id, cap);
        absorbed += sample.absorbed() as usize;
    }
    Ok(LadderPoint { side, samples: ladder.samples, absorbed })
}

/// Half-filled rings run to absorption; their frozen states are the
/// critical configurations whose number variance gives `ζ`.
pub fn measure_zeta(z: &ZetaConfig, root: u64) -> Result<ZetaMeasurement> {
    let g = Arc::new(Geometry::new(1, z.side, BoundaryMode::Periodic)?);
    let frozen: Vec<Option<crate::lattice::Configuration>> = (0..z.samples)
        .into_par_iter()
        .map(|s| {
            let id = ZETA_BLOCK + s;
            let mut init_rng = derive_rng(root, id, StreamPurpose::Initial);
            let c = initial_condition(&InitialKind::UniformN { n: z.side / 2 }, g.clone(), &mut init_rng)?;
            let mut state = SimulationState::new(c, derive_rng(root, id, StreamPurpose::Dynamics))?;
            let cap = StopCondition { events: Some(1_000_000_000), ..Default::default() };
            let done = state.run_until(cap) == crate::dynamics::StopReason::Absorbed;
            Ok(done.then(|| state.config().clone()))
        })
        .collect::<Result<_>>()?;
    let mut est = BoxVarianceEstimator::new(&g, z.box_sizes.clone(), BoxPlacement::All)?;
    let mut absorbed = 0;
    for c in frozen.iter().flatten() {
        est.add(c)?;
        absorbed += 1;
    }
    let (result, error) = if absorbed == 0 {
        (None, Some("no ring froze within the event cap".to_string()))
    } else {
        match est.finish(1).and_then(|c| hyperuniformity_exponent(&c)) {
            Ok(h) => (Some(h), None),
            Err(e) => (None, Some(e.to_string())),
        }
    };
    Ok(ZetaMeasurement { side: z.side, samples: z.samples, absorbed, result, error })
}

pub fn compute(cfg: &ExperimentConfig, cache: &TaskCache) -> Result<(SweepReport, usize)> {
    let geometry = Arc::new(cfg.geometry()?);
    let s = cfg.require(&cfg.sweep, "sweep")?.clone();
    let run = *cfg.require(&cfg.run, "run")?;
    let analysis = cfg.require(&cfg.analysis, "analysis")?.clone();
    let reps = cfg.replicas;
    let v = geometry.volume();

    let tasks: Vec<(usize, u64)> = (0..s.rhos.len()).flat_map(|k| (0..reps).map(move |r| (k, r))).collect();
    let measured: Vec<(ReplicaMeasurement, bool)> = tasks
        .par_iter()
        .map(|&(k, r)| {
            let rho = s.rhos[k];
            let init = sweep_initial(geometry.dim(), particles(rho, v));
            cache
                .get_or_run(&format!("rho{k}-replica{r}"), || {
                    measure_replica(&geometry, &init, cfg.seed, k as u64 * reps + r, &run, &analysis)
                })
                .map_err(|e| ClgError::Contract(format!("sweep task rho = {rho}, replica {r} (seed {}): {e}", cfg.seed)))
        })
        .collect::<Result<_>>()?;
    let resumed = measured.iter().filter(|m| m.1).count();
    let mut by_rho: Vec<Vec<ReplicaMeasurement>> = (0..s.rhos.len()).map(|_| Vec::new()).collect();
    for ((k, _), (m, _)) in tasks.iter().zip(measured) {
        by_rho[*k].push(m);
    }

    let ladders: Vec<Vec<LadderPoint>> = match &s.ladder {
        None => vec![Vec::new(); s.rhos.len()],
        Some(l) => {
            let jobs: Vec<(usize, usize)> =
                (0..s.rhos.len()).flat_map(|k| (0..l.sides.len()).map(move |j| (k, j))).collect();
            let pts: Vec<LadderPoint> = jobs
                .par_iter()
                .map(|&(k, j)| {
                    let first = LADDER_BLOCK + ((k * l.sides.len() + j) * l.samples) as u64;
                    cache.get_or_run(&format!("ladder-rho{k}-side{j}"), || {
                        ladder_point(s.rhos[k], l.sides[j], l, cfg.seed, first)
                    })
                    .map(|x| x.0)
                })
                .collect::<Result<_>>()?;
            pts.chunks(l.sides.len()).map(|c| c.to_vec()).collect()
        }
    };

    let mut points = Vec::with_capacity(s.rhos.len());
    for (k, parts) in by_rho.into_iter().enumerate() {
        let absorbed_snapshots = parts.iter().flat_map(|p| &p.records).filter(|r| r.absorbed).count();
        let a = analyse(parts, &analysis, run.batches)?;
        let ladder = ladders[k].clone();
        let crossover = match &s.ladder {
            Some(l) => Some(crossover_size(&ladder, l.threshold)?),
            None => None,
        };
        points.push(SweepPoint {
            rho: s.rhos[k],
            u: s.rhos[k] - s.rho_c,
            particles: particles(s.rhos[k], v),
            rho_a: a.summary.rho_a,
            activity: a.summary.activity,
            sigma: a.summary.sigma_hat,
            chi: a.chi(),
            chi_corr: a.chi_corr.map(|c| c.chi),
            xi_cross: a.xi_cross.map(|f| f.xi),
            ladder,
            crossover,
            absorbed_snapshots,
            samples: a.summary.samples,
        });
    }

    let zeta = s.zeta.as_ref().map(|z| measure_zeta(z, cfg.seed)).transpose()?;
    let mut report = SweepReport {
        dim: geometry.dim(),
        side: geometry.side(),
        seed: cfg.seed,
        replicas: reps,
        rho_c: s.rho_c,
        fit_window: s.fit_window,
        points,
        exponents: ExponentSet::default(),
        fits: BTreeMap::new(),
        fit_errors: BTreeMap::new(),
        diffusion: Vec::new(),
        zeta,
        relations: relation_check(&ExponentSet::default(), geometry.dim()),
    };
    report.refit(s.rho_c, s.fit_window);
    Ok((report, resumed))
}

impl SweepReport {
    /// Recomputes every fit for a given critical density and window in `u`.
    /// A grid with too few points in the window records why in `fit_errors`
    /// and leaves the exponent absent; observables are never discarded.
    pub fn refit(&mut self, rho_c: f64, window: (f64, f64)) {
        self.rho_c = rho_c;
        self.fit_window = window;
        for p in &mut self.points {
            p.u = p.rho - rho_c;
        }
        let mut fits = BTreeMap::new();
        let mut fit_errors = BTreeMap::new();
        let diffusion = match numerical_d(&self.points.iter().map(|p| (p.rho, p.rho_a)).collect::<Vec<_>>()) {
            Ok(d) => d,
            Err(e) => {
                fit_errors.insert("alpha".into(), e.to_string());
                Vec::new()
            }
        };
        let mut fit = |name: &str, pts: Vec<(f64, Estimate)>| -> Option<PowerLawFit> {
            match log_log_fit_weighted(&pts, window) {
                Ok(f) => {
                    fits.insert(name.to_string(), f);
                    Some(f)
                }
                Err(e) => {
                    fit_errors.insert(name.to_string(), e.to_string());
                    None
                }
            }
        };
        let points = &self.points;
        let series = |f: &dyn Fn(&SweepPoint) -> Option<Estimate>| -> Vec<(f64, Estimate)> {
            points.iter().filter_map(|p| f(p).map(|e| (p.u, e))).collect()
        };
        let beta = fit("beta", series(&|p| Some(p.rho_a)));
        let b = fit("b", series(&|p| Some(p.sigma)));
        let gamma = fit("gamma", series(&|p| p.chi.or(p.chi_corr)));
        let nu_cross = fit("nu_cross", series(&|p| p.xi_cross));
        let nu_perp = fit("nu_perp", series(&|p| p.crossover.and_then(|c| c.value())));
        let alpha = if diffusion.is_empty() {
            None
        } else {
            fit("alpha", diffusion.iter().map(|(r, d)| (r - rho_c, *d)).collect())
        };
        self.exponents = ExponentSet {
            rho_c: Some(Estimate::exact(rho_c)),
            beta: beta.map(|f| f.exponent_estimate()),
            b: b.map(|f| f.exponent_estimate()),
            alpha: alpha.map(|f| f.exponent_estimate()),
            gamma: gamma.map(|f| f.exponent_estimate()),
            nu_cross: nu_cross.map(|f| f.negated()),
            nu_perp: nu_perp.map(|f| f.negated()),
            zeta: self.zeta.as_ref().and_then(|z| z.result.map(|h| h.zeta)),
            z: None,
            theta: None,
        };
        self.relations = relation_check(&self.exponents, self.dim);
        self.fits = fits;
        self.fit_errors = fit_errors;
        self.diffusion = diffusion;
    }
}

pub const SWEEP_HEADER: &[&str] = &[
    "rho", "u", "n", "rhoA", "rhoA_err", "activity", "activity_err", "sigmaHat", "sigmaHat_err", "chi", "chi_err",
    "chiCorr", "chiCorr_err", "xiCross", "xiCross_err", "xiPerp", "xiPerp_err", "samples",
];

pub fn write(report: &SweepReport, dir: &Path) -> Result<Vec<String>> {
    let rows = report.points.iter().map(|p| {
        let mut row = vec![num(p.rho), num(p.u), p.particles.to_string()];
        for e in [
            Some(p.rho_a),
            Some(p.activity),
            Some(p.sigma),
            p.chi,
            p.chi_corr,
            p.xi_cross,
            p.crossover.and_then(|c| c.value()),
        ] {
            row.extend(est_cells(e));
        }
        row.push(p.samples.to_string());
        row
    });
    write_csv(&dir.join("sweep.csv"), SWEEP_HEADER, rows)?;
    write_json(&dir.join("exponents.json"), report)?;
    Ok(vec!["sweep.csv".into(), "exponents.json".into()])
}
