use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{AnalysisConfig, ExperimentConfig, RunConfig};
use super::output::{num, write_csv, write_json, TaskCache};
use crate::dynamics::{derive_rng, initial_condition, InitialKind, SimulationState, StopCondition, StreamPurpose};
use crate::error::Result;
use crate::exact1d::{exact_observables, two_point};
use crate::exponents::{significant_lag_window, xi_cross_fit, XiCrossFit};
use crate::lattice::Geometry;
use crate::observables::{
    compressibility_from_box_variance, compressibility_from_correlations, summarize, BoxChi, BoxPlacement,
    BoxVarianceEstimator, CorrelationChi, CorrelationEstimator, CorrelationProfile, ObservableRecord, ScalarSummary,
    VarianceCurve,
};
use crate::stats::{batch_means, Estimate};

/// Everything one replica of a stationary run produces.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplicaMeasurement {
    pub replica: u64,
    pub records: Vec<ObservableRecord>,
    /// Jumps executed between consecutive snapshots.
    pub jumps: Vec<u64>,
    pub interval: f64,
    pub edges: usize,
    pub corr: CorrelationEstimator,
    pub boxes: Option<BoxVarianceEstimator>,
}

/// Burn-in, then `snapshots` measurements `interval` apart.
pub fn measure_replica(
    geometry: &Arc<Geometry>,
    initial: &InitialKind,
    root: u64,
    replica: u64,
    run: &RunConfig,
    analysis: &AnalysisConfig,
) -> Result<ReplicaMeasurement> {
    let mut init_rng = derive_rng(root, replica, StreamPurpose::Initial);
    let c = initial_condition(initial, geometry.clone(), &mut init_rng)?;
    let mut state = SimulationState::new(c, derive_rng(root, replica, StreamPurpose::Dynamics))?;
    let burn = run.burn_in_events.unwrap_or(10 * geometry.volume() as u64);
    state.run_until(StopCondition::after_events(burn));
    let mut corr = CorrelationEstimator::new(geometry, analysis.max_lag, geometry.dim() > 1)?;
    let mut boxes = if analysis.box_sizes.is_empty() {
        None
    } else {
        Some(BoxVarianceEstimator::new(geometry, analysis.box_sizes.clone(), BoxPlacement::All)?)
    };
    let t0 = state.time();
    let mut records = Vec::with_capacity(run.snapshots);
    let mut jumps = Vec::with_capacity(run.snapshots);
    for k in 1..=run.snapshots {
        let before = state.jump_count();
        state.run_until(StopCondition::at_time(t0 + k as f64 * run.interval));
        jumps.push(state.jump_count() - before);
        records.push(ObservableRecord::from_state(&state));
        corr.add(state.config())?;
        if let Some(b) = boxes.as_mut() {
            b.add(state.config())?;
        }
    }
    Ok(ReplicaMeasurement {
        replica,
        records,
        jumps,
        interval: run.interval,
        edges: geometry.edge_count(),
        corr,
        boxes,
    })
}

/// The box-variance fit starts at this many correlation lengths, where the
/// exponential tail of `Var(R)` is negligible.
pub const BOX_FIT_XI: f64 = 4.0;

/// Pooled analysis of several replicas.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StationaryAnalysis {
    pub summary: ScalarSummary,
    /// Conductivity from realised jumps per edge and unit time.
    pub sigma_crossings: Estimate,
    pub correlations: CorrelationProfile,
    pub xi_cross: Option<XiCrossFit>,
    pub xi_error: Option<String>,
    pub chi_corr: Option<CorrelationChi>,
    pub box_curve: Option<VarianceCurve>,
    pub chi_box: Option<BoxChi>,
    pub chi_box_error: Option<String>,
}

impl StationaryAnalysis {
    pub fn phi(&self, lag: usize) -> Estimate {
        self.correlations.axial[lag]
    }

    /// Box-variance compressibility when available.
    pub fn chi(&self) -> Option<Estimate> {
        self.chi_box.and_then(|c| c.chi)
    }
}

/// Pools replicas in index order and runs the estimators.
///
/// The batch count is raised to a multiple of the replica count so that no
/// batch straddles two replicas. Long-wavelength observables decorrelate
/// slowly, and independent replicas are then what the errors rest on.
pub fn analyse(mut parts: Vec<ReplicaMeasurement>, analysis: &AnalysisConfig, batches: usize) -> Result<StationaryAnalysis> {
    parts.sort_by_key(|p| p.replica);
    let reps = parts.len().max(1);
    let batches = if reps > 1 { reps * batches.div_ceil(reps) } else { batches };
    let records: Vec<ObservableRecord> = parts.iter().flat_map(|p| p.records.iter().cloned()).collect();
    let summary = summarize(&records, batches);
    let crossings: Vec<f64> = parts
        .iter()
        .flat_map(|p| p.jumps.iter().map(move |&j| j as f64 / (p.interval * 2.0 * p.edges as f64)))
        .collect();
    let sigma_crossings = batch_means(&crossings, batches);

    let mut iter = parts.into_iter();
    let first = iter.next().expect("at least one replica");
    let mut corr = first.corr;
    let mut boxes = first.boxes;
    for p in iter {
        corr.merge(p.corr)?;
        if let (Some(b), Some(o)) = (boxes.as_mut(), p.boxes) {
            b.merge(o)?;
        }
    }
    let correlations = corr.finish(batches)?;
    let phi = correlations.axial_points();
    let window = analysis.xi_window.unwrap_or((2.0, correlations.max_lag() as f64));
    let upper = significant_lag_window(&phi, window.0, analysis.significance).map_or(window.1, |r| r.min(window.1));
    let (xi_cross, xi_error) = match xi_cross_fit(&phi, (window.0, upper)) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let chi_corr = compressibility_from_correlations(&correlations, correlations.max_lag(), xi_cross.map(|f| f.xi.value)).ok();
    let box_curve = boxes.map(|b| b.finish(batches)).transpose()?;
    let (chi_box, chi_box_error) = match &box_curve {
        Some(c) => match compressibility_from_box_variance(c, BOX_FIT_XI * xi_cross.map_or(0.0, |f| f.xi.value)) {
            Ok(x) => (Some(x), None),
            Err(e) => (None, Some(e.to_string())),
        },
        None => (None, None),
    };
    Ok(StationaryAnalysis {
        summary,
        sigma_crossings,
        correlations,
        xi_cross,
        xi_error,
        chi_corr,
        box_curve,
        chi_box,
        chi_box_error,
    })
}

/// One observable against its closed form.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExactCheck {
    pub name: String,
    pub measured: Estimate,
    pub exact: f64,
    /// Relative tolerance, or absolute when `absolute` is set.
    pub tolerance: f64,
    pub absolute: bool,
    pub pass: bool,
}

impl ExactCheck {
    fn new(name: &str, measured: Option<Estimate>, exact: f64, tolerance: f64, absolute: bool) -> Self {
        let m = measured.unwrap_or(Estimate::new(f64::NAN, f64::NAN));
        let dev = if absolute { (m.value - exact).abs() } else { ((m.value - exact) / exact).abs() };
        ExactCheck { name: name.into(), measured: m, exact, tolerance, absolute, pass: dev < tolerance }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StationaryReport {
    pub recipe: String,
    pub initial: InitialKind,
    pub replicas: u64,
    pub analysis: StationaryAnalysis,
    /// One-dimensional closed-form comparisons at the measured density.
    pub exact_checks: Vec<ExactCheck>,
    #[serde(skip)]
    pub records: Vec<ObservableRecord>,
}

impl StationaryReport {
    pub fn all_exact_pass(&self) -> bool {
        !self.exact_checks.is_empty() && self.exact_checks.iter().all(|c| c.pass)
    }
}

/// Declared tolerances of the one-dimensional comparison.
pub fn exact_checks(a: &StationaryAnalysis, rho: f64) -> Result<Vec<ExactCheck>> {
    let ex = exact_observables(rho)?;
    Ok(vec![
        ExactCheck::new("rhoA", Some(a.summary.rho_a), ex.rho_a, 0.01, false),
        ExactCheck::new("activity", Some(a.summary.activity), ex.activity, 0.02, false),
        ExactCheck::new("sigma", Some(a.summary.sigma_hat), ex.conductivity, 0.03, false),
        ExactCheck::new("sigma_crossings", Some(a.sigma_crossings), ex.conductivity, 0.03, false),
        ExactCheck::new("chi_box", a.chi(), ex.compressibility, 0.07, false),
        ExactCheck::new("chi_corr", a.chi_corr.map(|c| c.chi), ex.compressibility, 0.07, false),
        ExactCheck::new("phi1", Some(a.phi(1)), two_point(rho, 1), 0.003, true),
    ])
}

pub fn compute(cfg: &ExperimentConfig, cache: &TaskCache) -> Result<(StationaryReport, usize)> {
    let geometry = Arc::new(cfg.geometry()?);
    let initial = *cfg.require(&cfg.initial, "initial")?;
    let run = *cfg.require(&cfg.run, "run")?;
    let analysis = cfg.require(&cfg.analysis, "analysis")?.clone();
    let parts: Vec<(ReplicaMeasurement, bool)> = (0..cfg.replicas)
        .into_par_iter()
        .map(|r| {
            cache.get_or_run(&format!("replica-{r}"), || {
                measure_replica(&geometry, &initial, cfg.seed, r, &run, &analysis)
            })
        })
        .collect::<Result<_>>()?;
    let resumed = parts.iter().filter(|p| p.1).count();
    let parts: Vec<ReplicaMeasurement> = parts.into_iter().map(|p| p.0).collect();
    let records: Vec<ObservableRecord> = parts.iter().flat_map(|p| p.records.iter().cloned()).collect();
    let a = analyse(parts, &analysis, run.batches)?;
    let exact = if geometry.dim() == 1 { exact_checks(&a, a.summary.rho.value)? } else { Vec::new() };
    Ok((
        StationaryReport {
            recipe: cfg.recipe.name().into(),
            initial,
            replicas: cfg.replicas,
            analysis: a,
            exact_checks: exact,
            records,
        },
        resumed,
    ))
}

pub const OBSERVABLES_HEADER: &[&str] = &["t", "rho", "rhoA", "activity", "sigmaHat", "absorbed"];
pub const CORR_HEADER: &[&str] = &["lag", "phi", "stderr"];
pub const BOXVAR_HEADER: &[&str] = &["R", "var", "stderr"];
pub const EXACT_HEADER: &[&str] = &["rho", "rhoA", "activity", "D", "chi", "sigma", "xiCross", "xiPerp"];

pub fn write_exact_csv(path: &Path, rhos: &[f64]) -> Result<()> {
    let rows = rhos
        .iter()
        .map(|&r| {
            let e = exact_observables(r)?;
            Ok(vec![
                num(r),
                num(e.rho_a),
                num(e.activity),
                num(e.diffusion),
                num(e.compressibility),
                num(e.conductivity),
                num(e.xi_cross),
                num(e.xi_perp),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    write_csv(path, EXACT_HEADER, rows)
}

pub fn write(report: &StationaryReport, dir: &Path) -> Result<Vec<String>> {
    let mut files = vec!["observables.csv".to_string(), "corr.csv".into()];
    write_csv(
        &dir.join("observables.csv"),
        OBSERVABLES_HEADER,
        report.records.iter().map(|r| {
            vec![num(r.t), num(r.rho), num(r.rho_a), num(r.activity), num(r.sigma_hat), r.absorbed.to_string()]
        }),
    )?;
    write_csv(
        &dir.join("corr.csv"),
        CORR_HEADER,
        report.analysis.correlations.axial.iter().enumerate().map(|(k, e)| vec![k.to_string(), num(e.value), num(e.stderr)]),
    )?;
    if let Some(curve) = &report.analysis.box_curve {
        write_csv(
            &dir.join("boxvar.csv"),
            BOXVAR_HEADER,
            curve.points.iter().map(|p| vec![p.r.to_string(), num(p.var.value), num(p.var.stderr)]),
        )?;
        files.push("boxvar.csv".into());
    }
    if !report.exact_checks.is_empty() {
        write_exact_csv(&dir.join("exact.csv"), &[report.analysis.summary.rho.value])?;
        files.push("exact.csv".into());
    }
    write_json(&dir.join("summary.json"), report)?;
    files.push("summary.json".into());
    Ok(files)
}
