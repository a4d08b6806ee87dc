use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::output::{num, write_csv, write_json};
use crate::boundary::{dirichlet_solve, measure_stationary_profile, Coupling, DirichletSolution, ProfileProtocol, StationaryProfile};
use crate::dynamics::BoundarySpec;
use crate::error::Result;
use crate::lattice::Geometry;
use crate::stats::{mean, Estimate};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundaryReport {
    pub left: f64,
    pub right: f64,
    pub coupling: Coupling,
    pub profile: StationaryProfile,
    pub dirichlet: DirichletSolution,
    /// Dirichlet solution averaged over each hyperplane `i_1 = k`.
    pub dirichlet_planes: Vec<f64>,
    pub plane_max_z: f64,
    pub largest_plane_stderr: f64,
    /// Face rates predicted by the solution, in the ledger's sign convention.
    pub predicted_left: f64,
    pub predicted_right: f64,
    pub current_left: Option<Estimate>,
    pub current_right: Option<Estimate>,
    pub cut_consistency_z: f64,
}

impl BoundaryReport {
    /// Relative deviation of the measured left-face rate from the prediction.
    pub fn current_rel_error(&self) -> Option<f64> {
        self.current_left.map(|j| ((j.value - self.predicted_left) / self.predicted_left).abs())
    }
}

/// Net rate through each axis-1 face implied by `ρ_a`: every boundary site
/// exchanges `α(i) - ρ_a(i)` particles per unit time with its reservoir.
fn predicted_face_rates(g: &Geometry, spec: &BoundarySpec, values: &[f64]) -> (f64, f64) {
    let (mut left, mut right) = (0.0, 0.0);
    for (k, &s) in g.boundary_sites().iter().enumerate() {
        let inflow = spec.alpha()[k] - values[s];
        let c = g.first_coord(s);
        if c == 0 {
            left -= inflow;
        }
        if c + 1 == g.side() {
            right += inflow;
        }
    }
    (left, right)
}

pub fn compute(cfg: &ExperimentConfig) -> Result<BoundaryReport> {
    let geometry = Arc::new(cfg.geometry()?);
    let b = *cfg.require(&cfg.boundary, "boundary")?;
    let spec = BoundarySpec::left_right(&geometry, b.left, b.right)?;
    let protocol = ProfileProtocol {
        burn_in: b.burn_in,
        windows: b.windows,
        window_time: b.window_time,
        replicas: cfg.replicas,
    };
    let profile = measure_stationary_profile(geometry.clone(), &spec, protocol, cfg.seed)?;
    let dirichlet = dirichlet_solve(&geometry, &spec, b.coupling, 1e-12, 100_000)?;
    let plane = geometry.plane_size();
    let dirichlet_planes: Vec<f64> = dirichlet.values.chunks(plane).map(mean).collect();
    // Currents follow the dynamics, which couple each boundary site once.
    let per_site = if b.coupling == Coupling::PerSite {
        dirichlet.clone()
    } else {
        dirichlet_solve(&geometry, &spec, Coupling::PerSite, 1e-12, 100_000)?
    };
    let (predicted_left, predicted_right) = predicted_face_rates(&geometry, &spec, &per_site.values);
    Ok(BoundaryReport {
        left: b.left,
        right: b.right,
        coupling: b.coupling,
        plane_max_z: profile.plane_max_z(&dirichlet_planes),
        largest_plane_stderr: profile.planes.iter().map(|e| e.stderr).fold(0.0, f64::max),
        current_left: profile.current_left(),
        current_right: profile.current_right(),
        cut_consistency_z: profile.cut_consistency_z(),
        predicted_left,
        predicted_right,
        dirichlet_planes,
        dirichlet,
        profile,
    })
}

pub const CURRENT_HEADER: &[&str] = &["t", "J_left", "J_right"];

pub fn profile_header(dim: usize) -> Vec<String> {
    let mut h: Vec<String> = (1..=dim).map(|a| format!("i{a}")).collect();
    h.extend(["rhoA_measured", "stderr", "rhoA_dirichlet"].map(String::from));
    h
}

pub fn write(report: &BoundaryReport, geometry: &Geometry, dir: &Path) -> Result<Vec<String>> {
    let header = profile_header(geometry.dim());
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = (0..geometry.volume()).map(|s| {
        let mut row: Vec<String> = geometry.coords_of(s).iter().map(|c| c.to_string()).collect();
        let e = report.profile.sites[s];
        row.extend([num(e.value), num(e.stderr), num(report.dirichlet.values[s])]);
        row
    });
    write_csv(&dir.join("profile.csv"), &header, rows)?;
    let rows = report
        .profile
        .ledgers
        .iter()
        .flat_map(|l| l.samples.iter().map(|&(t, a, b)| vec![num(t), a.to_string(), b.to_string()]));
    write_csv(&dir.join("current.csv"), CURRENT_HEADER, rows)?;
    write_json(&dir.join("boundary.json"), report)?;
    Ok(vec!["profile.csv".into(), "current.csv".into(), "boundary.json".into()])
}
