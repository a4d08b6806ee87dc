use serde::{Deserialize, Serialize};

use crate::error::{ClgError, Result};
use crate::stats::{linear_fit, weighted_fit, Estimate};

/// Result of fitting `y = prefactor · u^exponent` in log-log coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub exponent_stderr: f64,
    pub prefactor: f64,
    pub prefactor_stderr: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
    pub points: usize,
    /// Points inside the window dropped because `y <= 0`.
    pub excluded: usize,
}

impl PowerLawFit {
    pub fn exponent_estimate(&self) -> Estimate {
        Estimate::new(self.exponent, self.exponent_stderr)
    }

    /// Exponent of the reciprocal law `y ∼ u^{-ν}`, i.e. `-exponent`.
    pub fn negated(&self) -> Estimate {
        Estimate::new(-self.exponent, self.exponent_stderr)
    }
}

pub const MIN_FIT_POINTS: usize = 4;

fn select(points: &[(f64, Estimate)], window: (f64, f64)) -> Result<(Vec<(f64, Estimate)>, usize)> {
    let (lo, hi) = window;
    if !(lo > 0.0 && hi >= lo) {
        return Err(ClgError::usage(format!("invalid fit window [{lo}, {hi}]")));
    }
    let inside: Vec<_> = points
        .iter()
        .copied()
        .filter(|(u, _)| *u >= lo * (1.0 - 1e-12) && *u <= hi * (1.0 + 1e-12))
        .collect();
    let kept: Vec<_> = inside.iter().copied().filter(|(_, y)| y.value > 0.0).collect();
    let excluded = inside.len() - kept.len();
    if kept.len() < MIN_FIT_POINTS {
        return Err(ClgError::insufficient(format!(
            "{} usable points in window [{lo}, {hi}] ({excluded} non-positive excluded), need {MIN_FIT_POINTS}",
            kept.len()
        )));
    }
    Ok((kept, excluded))
}

fn finish(fit: crate::stats::LineFit, window: (f64, f64), points: usize, excluded: usize) -> PowerLawFit {
    let prefactor = fit.intercept.exp();
    PowerLawFit {
        exponent: fit.slope,
        exponent_stderr: fit.slope_stderr,
        prefactor,
        prefactor_stderr: prefactor * fit.intercept_stderr,
        r_squared: fit.r_squared,
        window,
        points,
        excluded,
    }
}

/// Ordinary least squares on `(ln u, ln y)` for points with `u` in `window`.
pub fn log_log_fit(points: &[(f64, f64)], window: (f64, f64)) -> Result<PowerLawFit> {
    let wrapped: Vec<_> = points.iter().map(|&(u, y)| (u, Estimate::new(y, 0.0))).collect();
    let (kept, excluded) = select(&wrapped, window)?;
    let xs: Vec<f64> = kept.iter().map(|(u, _)| u.ln()).collect();
    let ys: Vec<f64> = kept.iter().map(|(_, y)| y.value.ln()).collect();
    let fit = linear_fit(&xs, &ys)
        .ok_or_else(|| ClgError::insufficient("degenerate fit window: all u equal"))?;
    Ok(finish(fit, window, kept.len(), excluded))
}

/// Weighted variant using `σ_{ln y} = σ_y / y`. Points without a positive
/// error fall back to the unweighted fit.
pub fn log_log_fit_weighted(points: &[(f64, Estimate)], window: (f64, f64)) -> Result<PowerLawFit> {
    let (kept, excluded) = select(points, window)?;
    if kept.iter().any(|(_, y)| !(y.stderr > 0.0)) {
        let plain: Vec<_> = kept.iter().map(|(u, y)| (*u, y.value)).collect();
        let mut f = log_log_fit(&plain, window)?;
        f.excluded = excluded;
        return Ok(f);
    }
    let xs: Vec<f64> = kept.iter().map(|(u, _)| u.ln()).collect();
    let ys: Vec<f64> = kept.iter().map(|(_, y)| y.value.ln()).collect();
    let w: Vec<f64> = kept
        .iter()
        .map(|(_, y)| {
            let s = y.stderr / y.value;
            1.0 / (s * s)
        })
        .collect();
    // Errors are rescaled by the reduced chi-square only when it exceeds one,
    // so that model misfit inflates rather than hides the uncertainty.
    let raw = weighted_fit(&xs, &ys, &w, false)
        .ok_or_else(|| ClgError::insufficient("degenerate fit window: all u equal"))?;
    let scaled = weighted_fit(&xs, &ys, &w, true).expect("same data");
    let fit = if scaled.slope_stderr > raw.slope_stderr { scaled } else { raw };
    Ok(finish(fit, window, kept.len(), excluded))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn planted_square_law() {
        let pts: Vec<_> = (1..=8).map(|k| {
            let u = 0.01 * k as f64;
            (u, 3.0 * u * u)
        }).collect();
        let f = log_log_fit(&pts, (0.01, 0.08)).unwrap();
        assert!((f.exponent - 2.0).abs() < 1e-10);
        assert!((f.prefactor - 3.0).abs() < 1e-9);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn non_positive_points_are_excluded_and_reported() {
        let mut pts: Vec<_> = (1..=6).map(|k| (k as f64, 2.0 * k as f64)).collect();
        pts.push((7.0, 0.0));
        pts.push((8.0, -1.0));
        let f = log_log_fit(&pts, (1.0, 8.0)).unwrap();
        assert_eq!(f.excluded, 2);
        assert_eq!(f.points, 6);
        assert!((f.exponent - 1.0).abs() < 1e-12);
    }

    #[test]
    fn too_few_points_is_an_error() {
        let pts = vec![(1.0, 1.0), (2.0, 2.0), (3.0, 3.0)];
        assert!(matches!(log_log_fit(&pts, (1.0, 3.0)), Err(ClgError::Insufficient(_))));
        assert!(log_log_fit(&pts, (0.0, 3.0)).is_err());
        assert!(log_log_fit(&pts, (3.0, 1.0)).is_err());
    }

    #[test]
    fn noisy_planted_exponent_within_three_sigma() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut misses = 0;
        for _ in 0..200 {
            let pts: Vec<_> = (0..12)
                .map(|k| {
                    let u = 0.02 * 1.2f64.powi(k);
                    let noise = 1.0 + 0.05 * (2.0 * rng.random::<f64>() - 1.0) * 3f64.sqrt();
                    (u, 0.7 * u.powf(1.3) * noise)
                })
                .collect();
            let f = log_log_fit(&pts, (0.01, 1.0)).unwrap();
            if (f.exponent - 1.3).abs() > 3.0 * f.exponent_stderr {
                misses += 1;
            }
        }
        assert!(misses <= 4, "{misses} fits outside 3 sigma");
    }

    #[test]
    fn weighted_fit_on_exact_data() {
        let pts: Vec<_> = (1..=6)
            .map(|k| {
                let u = k as f64;
                (u, Estimate::new(5.0 / u, 0.01 / u))
            })
            .collect();
        let f = log_log_fit_weighted(&pts, (1.0, 6.0)).unwrap();
        assert!((f.exponent + 1.0).abs() < 1e-12);
        assert!((f.negated().value - 1.0).abs() < 1e-12);
    }
}
