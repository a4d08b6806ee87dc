use serde::{Deserialize, Serialize};

use crate::dynamics::BoundarySpec;
use crate::error::{ClgError, Result};
use crate::lattice::Geometry;

/// How a boundary site couples to its reservoir in the discrete problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Coupling {
    /// Every mirror neighbour of `i` carries `α(i)`: a corner of the open box
    /// couples once per missing neighbour.
    #[default]
    PerMirrorNeighbour,
    /// One coupling per boundary site, whatever its number of mirror
    /// neighbours. This is the stationarity condition of the reservoir
    /// dynamics with one resampling clock per boundary site.
    PerSite,
}

impl Coupling {
    fn weight(self, geometry: &Geometry, site: usize) -> f64 {
        match self {
            Coupling::PerMirrorNeighbour => geometry.mirror_count(site) as f64,
            Coupling::PerSite => if geometry.mirror_count(site) > 0 { 1.0 } else { 0.0 },
        }
    }
}

/// Solution of `Σ_{j∼i}(ρ_a(j) - ρ_a(i)) = 0` with `ρ_a = α` on the mirror
/// sites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirichletSolution {
    pub values: Vec<f64>,
    /// Largest absolute harmonicity residual over the lattice.
    pub residual: f64,
    pub iterations: usize,
    pub coupling: Coupling,
}

impl DirichletSolution {
    pub fn min_max(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    /// `min α ≤ ρ_a ≤ max α` up to `slack`.
    pub fn satisfies_max_principle(&self, spec: &BoundarySpec, slack: f64) -> bool {
        let (lo, hi) = self.min_max();
        let amin = spec.alpha().iter().copied().fold(f64::INFINITY, f64::min);
        let amax = spec.alpha().iter().copied().fold(f64::NEG_INFINITY, f64::max);
        lo >= amin - slack && hi <= amax + slack
    }
}

/// Per-site coupling weights and reservoir values, zero off the boundary.
fn boundary_terms(geometry: &Geometry, spec: &BoundarySpec, coupling: Coupling) -> (Vec<f64>, Vec<f64>) {
    let mut w = vec![0.0; geometry.volume()];
    let mut a = vec![0.0; geometry.volume()];
    for (k, &s) in geometry.boundary_sites().iter().enumerate() {
        w[s] = coupling.weight(geometry, s);
        a[s] = spec.alpha()[k];
    }
    (w, a)
}

/// `(Mx)_i = (n_i + w_i) x_i - Σ_{j∼i in box} x_j`, the negated Laplacian with
/// the reservoir couplings on the diagonal.
fn apply(geometry: &Geometry, w: &[f64], x: &[f64], out: &mut [f64]) {
    for i in 0..geometry.volume() {
        let mut acc = w[i] * x[i];
        for dir in 0..geometry.degree() {
            if let Some(j) = geometry.neighbor(i, dir) {
                acc += x[i] - x[j];
            }
        }
        out[i] = acc;
    }
}

/// Discrete Laplacian with mirror data, `Σ_{j∼i}(f(j) - f(i))`, at every site.
pub fn harmonic_residual(geometry: &Geometry, spec: &BoundarySpec, coupling: Coupling, f: &[f64]) -> Vec<f64> {
    let (w, a) = boundary_terms(geometry, spec, coupling);
    let mut mf = vec![0.0; f.len()];
    apply(geometry, &w, f, &mut mf);
    (0..f.len()).map(|i| w[i] * a[i] - mf[i]).collect()
}

/// Conjugate gradients on the symmetric positive definite system. Stops when
/// the largest harmonicity residual drops below `tol`.
pub fn dirichlet_solve(
    geometry: &Geometry,
    spec: &BoundarySpec,
    coupling: Coupling,
    tol: f64,
    max_iterations: usize,
) -> Result<DirichletSolution> {
    if geometry.mode().is_periodic() {
        return Err(ClgError::usage("the Dirichlet problem needs an open or cylinder lattice"));
    }
    let n = geometry.volume();
    let (w, a) = boundary_terms(geometry, spec, coupling);
    let b: Vec<f64> = (0..n).map(|i| w[i] * a[i]).collect();
    // Start from the mean reservoir value; exact for constant data.
    let mean = spec.alpha().iter().sum::<f64>() / spec.alpha().len() as f64;
    let mut x = vec![mean; n];
    let mut mx = vec![0.0; n];
    apply(geometry, &w, &x, &mut mx);
    let mut r: Vec<f64> = (0..n).map(|i| b[i] - mx[i]).collect();
    let mut p = r.clone();
    let mut rr: f64 = r.iter().map(|v| v * v).sum();
    let max_abs = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut iterations = 0;
    let mut mp = vec![0.0; n];
    while max_abs(&r) >= tol {
        if iterations >= max_iterations {
            return Err(ClgError::NoConvergence { iterations, residual: max_abs(&r) });
        }
        apply(geometry, &w, &p, &mut mp);
        let pmp: f64 = p.iter().zip(&mp).map(|(u, v)| u * v).sum();
        let step = rr / pmp;
        for i in 0..n {
            x[i] += step * p[i];
            r[i] -= step * mp[i];
        }
        let rr_new: f64 = r.iter().map(|v| v * v).sum();
        let beta = rr_new / rr;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rr = rr_new;
        iterations += 1;
        // Refresh the recursive residual now and then to avoid drift.
        if iterations % 50 == 0 {
            apply(geometry, &w, &x, &mut mx);
            for i in 0..n {
                r[i] = b[i] - mx[i];
            }
        }
    }
    apply(geometry, &w, &x, &mut mx);
    let residual = (0..n).map(|i| (b[i] - mx[i]).abs()).fold(0.0, f64::max);
    Ok(DirichletSolution { values: x, residual, iterations, coupling })
}
