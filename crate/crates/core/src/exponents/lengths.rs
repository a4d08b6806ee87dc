use serde::{Deserialize, Serialize};

use crate::error::{ClgError, Result};
use crate::exponents::relations::propagate;
use crate::stats::{weighted_fit, Estimate};

/// Exponential fit of `|φ(r)|` against the lag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XiCrossFit {
    pub xi: Estimate,
    /// Slope of `ln|φ|` against `r`, i.e. `-1/ξ`.
    pub slope: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
    pub points: usize,
    /// False when `|φ|` is not strictly decreasing across the window.
    pub monotone: bool,
}

/// Fits `ln|φ(r)| = c - r/ξ` over lags in `window`.
///
/// Absolute values take care of the sign alternation seen in one dimension.
/// Values are normalised by the largest `|φ|` in the window before taking
/// logs, so a common positive factor on the input does not move `ξ`.
pub fn xi_cross_fit(phi: &[(f64, Estimate)], window: (f64, f64)) -> Result<XiCrossFit> {
    let (lo, hi) = window;
    if !(hi > lo) {
        return Err(ClgError::usage(format!("invalid lag window [{lo}, {hi}]")));
    }
    let mut pts: Vec<(f64, f64, f64)> = phi
        .iter()
        .filter(|(r, e)| *r >= lo && *r <= hi && e.value != 0.0)
        .map(|(r, e)| (*r, e.value.abs(), e.stderr))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    if pts.len() < 2 {
        return Err(ClgError::insufficient(format!(
            "{} non-zero correlation values in lag window [{lo}, {hi}]",
            pts.len()
        )));
    }
    let scale = pts.iter().map(|p| p.1).fold(0.0, f64::max);
    let monotone = pts.windows(2).all(|w| w[1].1 < w[0].1);
    let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pts.iter().map(|p| (p.1 / scale).ln()).collect();
    let weighted = pts.iter().all(|p| p.2 > 0.0);
    let w: Vec<f64> = if weighted {
        pts.iter().map(|p| (p.1 / p.2).powi(2)).collect()
    } else {
        vec![1.0; pts.len()]
    };
    let fit = if weighted {
        let raw = weighted_fit(&xs, &ys, &w, false);
        let scaled = weighted_fit(&xs, &ys, &w, true);
        match (raw, scaled) {
            (Some(a), Some(b)) if b.slope_stderr > a.slope_stderr => Some(b),
            (a, _) => a,
        }
    } else {
        weighted_fit(&xs, &ys, &w, true)
    }
    .ok_or_else(|| ClgError::insufficient("degenerate lag window"))?;
    if !(fit.slope < 0.0) {
        return Err(ClgError::Domain(format!(
            "correlations do not decay on [{lo}, {hi}] (slope {:.4})",
            fit.slope
        )));
    }
    let xi = -1.0 / fit.slope;
    Ok(XiCrossFit {
        xi: Estimate::new(xi, fit.slope_stderr / (fit.slope * fit.slope)),
        slope: fit.slope,
        r_squared: fit.r_squared,
        window,
        points: pts.len(),
        monotone,
    })
}

/// Largest lag `r_max ≥ r_min` such that every lag in `[r_min, r_max]` has
/// `|φ| ≥ k·stderr`. Returns `None` when already `φ(r_min)` is not significant.
pub fn significant_lag_window(phi: &[(f64, Estimate)], r_min: f64, k: f64) -> Option<f64> {
    let mut sorted: Vec<_> = phi.iter().filter(|(r, _)| *r >= r_min).copied().collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut last = None;
    for (r, e) in sorted {
        if e.value.abs() < k * e.stderr || e.value == 0.0 {
            break;
        }
        last = Some(r);
    }
    last
}

/// `ξ_⊥ = (ρ-ρ_c)^{-1/(d-ζ)}`, the side at which the excess particle number
/// `L^d(ρ-ρ_c)` matches the fluctuation scale `L^ζ`.
pub fn hidden_density_xi_perp(rho: f64, rho_c: Estimate, zeta: Estimate, dim: usize) -> Result<Estimate> {
    let d = dim as f64;
    if zeta.value >= d {
        return Err(ClgError::Domain(format!("hidden-density length needs ζ < d, got ζ = {} with d = {dim}", zeta.value)));
    }
    if rho <= rho_c.value {
        return Err(ClgError::Domain(format!("hidden-density length needs ρ > ρ_c, got ρ = {rho}, ρ_c = {}", rho_c.value)));
    }
    Ok(propagate(
        |v| (rho - v[0]).powf(-1.0 / (d - v[1])),
        &[rho_c, zeta],
    ))
}

/// Absorption statistics for one side length of the crossover ladder: of
/// `samples` runs, `absorbed` froze before the time cap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LadderPoint {
    pub side: usize,
    pub samples: usize,
    pub absorbed: usize,
}

impl LadderPoint {
    /// Absorbed fraction with a half-count continuity correction, so that the
    /// logarithm stays finite at 0 and 1.
    fn fraction(&self) -> Estimate {
        let n = self.samples as f64;
        let f = (self.absorbed as f64 + 0.5) / (n + 1.0);
        Estimate::new(f, (f * (1.0 - f) / n).sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CrossoverEstimate {
    /// `L*` interpolated between the bracketing ladder sides.
    Located { side: Estimate, bracket: (usize, usize) },
    /// Already the smallest side stays active: `L* ≤ side`.
    AtOrBelow { side: usize },
    /// Even the largest side absorbs: `L* > side`.
    Above { side: usize },
}

impl CrossoverEstimate {
    pub fn value(&self) -> Option<Estimate> {
        match self {
            CrossoverEstimate::Located { side, .. } => Some(*side),
            _ => None,
        }
    }
}

/// Crossover size: the first side at which the fraction of runs absorbed
/// before the cap drops below `threshold`. With threshold 1/2 this is the
/// side where the median absorption time first exceeds the cap.
///
/// Between ladder sides the fraction is interpolated log-linearly, which is
/// the shape of an exponentially rare frozen state.
pub fn crossover_size(ladder: &[LadderPoint], threshold: f64) -> Result<CrossoverEstimate> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(ClgError::usage(format!("threshold must lie in (0,1), got {threshold}")));
    }
    if ladder.is_empty() || ladder.iter().any(|p| p.samples == 0) {
        return Err(ClgError::insufficient("empty crossover ladder"));
    }
    if ladder.windows(2).any(|w| w[1].side <= w[0].side) {
        return Err(ClgError::usage("ladder sides must be strictly increasing"));
    }
    let below = |p: &LadderPoint| (p.absorbed as f64) < threshold * p.samples as f64;
    let Some(k) = ladder.iter().position(below) else {
        return Ok(CrossoverEstimate::Above { side: ladder[ladder.len() - 1].side });
    };
    if k == 0 {
        return Ok(CrossoverEstimate::AtOrBelow { side: ladder[0].side });
    }
    let (a, b) = (ladder[k - 1], ladder[k]);
    let (la, lb) = (a.side as f64, b.side as f64);
    let lt = threshold.ln();
    let side = propagate(
        |v| {
            let (fa, fb) = (v[0].ln(), v[1].ln());
            let s = if fa > fb { ((fa - lt) / (fa - fb)).clamp(0.0, 1.0) } else { 0.5 };
            la + s * (lb - la)
        },
        &[a.fraction(), b.fraction()],
    );
    let half = 0.5 * (lb - la);
    Ok(CrossoverEstimate::Located {
        side: Estimate::new(side.value, side.stderr.min(half)),
        bracket: (a.side, b.side),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exact(points: &[(f64, f64)]) -> Vec<(f64, Estimate)> {
        points.iter().map(|&(r, v)| (r, Estimate::exact(v))).collect()
    }

    #[test]
    fn planted_exponential() {
        let phi: Vec<_> = (0..20).map(|r| (r as f64, (-(r as f64) / 5.0).exp())).collect();
        let f = xi_cross_fit(&exact(&phi), (2.0, 15.0)).unwrap();
        assert!((f.xi.value - 5.0).abs() < 1e-10);
        assert!(f.monotone);
    }

    #[test]
    fn alternating_one_dimensional_profile() {
        let rho: f64 = 0.75;
        let ra = (2.0 * rho - 1.0) / rho;
        let phi: Vec<_> = (0..12)
            .map(|r| (r as f64, rho * (1.0 - rho) * (ra - 1.0).powi(r)))
            .collect();
        let f = xi_cross_fit(&exact(&phi), (2.0, 10.0)).unwrap();
        assert!((f.xi.value - 1.0 / 3f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn scale_equivariance() {
        let phi: Vec<_> = (0..10)
            .map(|r| (r as f64, Estimate::new((-(r as f64) / 2.3).exp() * (1.0 + 0.01 * (r % 3) as f64), 1e-3)))
            .collect();
        let base = xi_cross_fit(&phi, (2.0, 9.0)).unwrap();
        let scaled: Vec<_> = phi
            .iter()
            .map(|(r, e)| (*r, Estimate::new(4.0 * e.value, 4.0 * e.stderr)))
            .collect();
        assert_eq!(xi_cross_fit(&scaled, (2.0, 9.0)).unwrap().xi, base.xi);
        let odd: Vec<_> = phi
            .iter()
            .map(|(r, e)| (*r, Estimate::new(0.37 * e.value, 0.37 * e.stderr)))
            .collect();
        let other = xi_cross_fit(&odd, (2.0, 9.0)).unwrap();
        assert!((other.xi.value - base.xi.value).abs() < 1e-12 * base.xi.value);
    }

    #[test]
    fn non_monotone_is_flagged_and_growth_rejected() {
        let f = xi_cross_fit(&exact(&[(2.0, 1.0), (3.0, 0.2), (4.0, 0.3), (5.0, 0.01)]), (2.0, 5.0)).unwrap();
        assert!(!f.monotone);
        assert!(xi_cross_fit(&exact(&[(2.0, 1.0), (3.0, 2.0), (4.0, 4.0)]), (2.0, 4.0)).is_err());
    }

    #[test]
    fn significance_window() {
        let phi = vec![
            (1.0, Estimate::new(-0.06, 0.001)),
            (2.0, Estimate::new(0.02, 0.001)),
            (3.0, Estimate::new(-0.007, 0.001)),
            (4.0, Estimate::new(0.002, 0.001)),
            (5.0, Estimate::new(-0.0009, 0.001)),
        ];
        assert_eq!(significant_lag_window(&phi, 2.0, 3.0), Some(3.0));
        assert_eq!(significant_lag_window(&phi, 5.0, 3.0), None);
    }

    #[test]
    fn hidden_density_values_and_guards() {
        let xi = hidden_density_xi_perp(0.75, Estimate::exact(0.5), Estimate::exact(0.0), 1).unwrap();
        assert!((xi.value - 4.0).abs() < 1e-12);
        assert_eq!(xi.stderr, 0.0);
        assert!(hidden_density_xi_perp(0.75, Estimate::exact(0.5), Estimate::exact(1.0), 1).is_err());
        assert!(hidden_density_xi_perp(0.4, Estimate::exact(0.5), Estimate::exact(0.0), 1).is_err());
        let a = hidden_density_xi_perp(0.55, Estimate::exact(0.5), Estimate::exact(0.0), 1).unwrap();
        let b = hidden_density_xi_perp(0.6, Estimate::exact(0.5), Estimate::exact(0.0), 1).unwrap();
        assert!((a.value / b.value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn crossover_interpolation_and_censoring() {
        let lad = |fr: &[usize]| -> Vec<LadderPoint> {
            fr.iter()
                .enumerate()
                .map(|(k, &a)| LadderPoint { side: 4 + 2 * k, samples: 1000, absorbed: a })
                .collect()
        };
        match crossover_size(&lad(&[900, 700, 300, 100]), 0.5).unwrap() {
            CrossoverEstimate::Located { side, bracket } => {
                assert_eq!(bracket, (6, 8));
                assert!(side.value > 6.0 && side.value < 8.0);
                assert!(side.stderr > 0.0 && side.stderr <= 1.0);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(crossover_size(&lad(&[100, 50]), 0.5).unwrap(), CrossoverEstimate::AtOrBelow { side: 4 });
        assert_eq!(crossover_size(&lad(&[990, 800]), 0.5).unwrap(), CrossoverEstimate::Above { side: 6 });
        assert!(crossover_size(&[], 0.5).is_err());
        assert!(crossover_size(&lad(&[1]), 1.5).is_err());
    }
}
