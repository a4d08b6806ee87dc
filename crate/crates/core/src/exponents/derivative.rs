use crate::error::{ClgError, Result};
use crate::stats::Estimate;

/// Three-point weights for `f'(x_k)` on a possibly non-uniform grid, exact for
/// quadratics.
fn weights(x0: f64, x1: f64, x2: f64, at: f64) -> [f64; 3] {
    // Derivatives of the Lagrange basis polynomials evaluated at `at`.
    [
        ((at - x1) + (at - x2)) / ((x0 - x1) * (x0 - x2)),
        ((at - x0) + (at - x2)) / ((x1 - x0) * (x1 - x2)),
        ((at - x0) + (at - x1)) / ((x2 - x0) * (x2 - x1)),
    ]
}

/// Diffusion coefficient `D(ρ) = dρ_a/dρ` from a density sweep.
///
/// Uses central three-point differences in the interior and one-sided
/// three-point differences at the two ends; both are second order and exact
/// on affine data. Standard errors are propagated assuming independent points.
pub fn numerical_d(sweep: &[(f64, Estimate)]) -> Result<Vec<(f64, Estimate)>> {
    let n = sweep.len();
    if n < 3 {
        return Err(ClgError::insufficient(format!(
            "numerical derivative needs at least 3 grid points, got {n}"
        )));
    }
    if sweep.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(ClgError::usage("density grid must be strictly increasing"));
    }
    let out = (0..n)
        .map(|k| {
            let base = k.clamp(1, n - 2) - 1;
            let (a, b, c) = (sweep[base], sweep[base + 1], sweep[base + 2]);
            let w = weights(a.0, b.0, c.0, sweep[k].0);
            let value = w[0] * a.1.value + w[1] * b.1.value + w[2] * c.1.value;
            let var = (w[0] * a.1.stderr).powi(2) + (w[1] * b.1.stderr).powi(2) + (w[2] * c.1.stderr).powi(2);
            (sweep[k].0, Estimate::new(value, var.sqrt()))
        })
        .collect();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(f: impl Fn(f64) -> f64, lo: f64, step: f64, n: usize) -> Vec<(f64, Estimate)> {
        (0..n)
            .map(|k| {
                let x = lo + step * k as f64;
                (x, Estimate::exact(f(x)))
            })
            .collect()
    }

    #[test]
    fn exact_on_affine_input() {
        let d = numerical_d(&grid(|r| 2.0 * r - 1.0, 0.5, 0.01, 11)).unwrap();
        assert!(d.iter().all(|(_, e)| (e.value - 2.0).abs() < 1e-10));
    }

    #[test]
    fn constant_gives_zero() {
        let d = numerical_d(&grid(|_| 0.3, 0.5, 0.02, 5)).unwrap();
        assert!(d.iter().all(|(_, e)| e.value.abs() < 1e-12));
    }

    #[test]
    fn one_dimensional_active_density() {
        // ρ_a = (2ρ-1)/ρ, so D = 1/ρ² and D(0.75) = 16/9.
        let d = numerical_d(&grid(|r| (2.0 * r - 1.0) / r, 0.6, 0.01, 31)).unwrap();
        let (_, at) = d.iter().find(|(x, _)| (x - 0.75).abs() < 1e-9).unwrap();
        assert!((at.value - 16.0 / 9.0).abs() < 1e-3);
    }

    #[test]
    fn second_order_convergence() {
        let f = |r: f64| (2.0 * r - 1.0) / r;
        let err = |h: f64| {
            let d = numerical_d(&grid(f, 0.75 - 4.0 * h, h, 9)).unwrap();
            let int = (d[4].1.value - 16.0 / 9.0).abs();
            let e = numerical_d(&grid(f, 0.6, h, 5)).unwrap();
            let end = (e[0].1.value - 1.0 / 0.36).abs();
            (int, end)
        };
        let (i1, e1) = err(0.01);
        let (i2, e2) = err(0.005);
        assert!((i1 / i2 - 4.0).abs() < 0.2, "interior ratio {}", i1 / i2);
        assert!((e1 / e2 - 4.0).abs() < 0.5, "endpoint ratio {}", e1 / e2);
    }

    #[test]
    fn error_propagation_and_guards() {
        let pts = vec![
            (0.5, Estimate::new(0.0, 0.1)),
            (0.6, Estimate::new(0.1, 0.1)),
            (0.7, Estimate::new(0.2, 0.1)),
        ];
        let d = numerical_d(&pts).unwrap();
        assert!((d[1].1.stderr - (2.0f64).sqrt() * 0.1 / 0.2).abs() < 1e-12);
        assert!(numerical_d(&pts[..2]).is_err());
        let bad = vec![pts[0], pts[2], pts[1]];
        assert!(numerical_d(&bad).is_err());
    }
}
