//! Small statistics helpers shared by the estimators.

use serde::{Deserialize, Serialize};

/// A value with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn new(value: f64, stderr: f64) -> Self {
        Estimate { value, stderr }
    }

    pub fn exact(value: f64) -> Self {
        Estimate { value, stderr: 0.0 }
    }

    /// Number of standard errors separating the estimate from `target`.
    pub fn z_score(&self, target: f64) -> f64 {
        if self.stderr > 0.0 {
            (self.value - target) / self.stderr
        } else if self.value == target {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

impl std::fmt::Display for Estimate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:.6} ± {:.6}", self.value, self.stderr)
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return f64::NAN;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64
}

/// Mean and standard error of the mean, treating samples as independent.
pub fn mean_stderr(xs: &[f64]) -> Estimate {
    let n = xs.len();
    let se = if n >= 2 { (variance(xs) / n as f64).sqrt() } else { f64::NAN };
    Estimate::new(mean(xs), se)
}

/// Mean with a batch-means standard error over `batches` contiguous blocks.
/// Falls back to the naive error when there are fewer samples than batches.
pub fn batch_means(xs: &[f64], batches: usize) -> Estimate {
    let n = xs.len();
    if batches < 2 || n < 2 * batches {
        return mean_stderr(xs);
    }
    let size = n / batches;
    let means: Vec<f64> = (0..batches)
        .map(|b| mean(&xs[b * size..(b + 1) * size]))
        .collect();
    Estimate::new(mean(xs), (variance(&means) / batches as f64).sqrt())
}

/// Ordinary (optionally weighted) least-squares line `y = intercept + slope·x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub intercept_stderr: f64,
    pub r_squared: f64,
    pub n: usize,
}

/// Unweighted least squares. Standard errors come from the residual scatter.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let w = vec![1.0; xs.len()];
    weighted_fit(xs, ys, &w, true)
}

/// Weighted least squares with weights `w_k`. When `scale_by_residuals` is
/// true the parameter covariance is rescaled by the reduced chi-square, which
/// is the usual choice for unweighted data; for `w = 1/σ²` with trusted σ pass
/// false.
pub fn weighted_fit(xs: &[f64], ys: &[f64], w: &[f64], scale_by_residuals: bool) -> Option<LineFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n || w.len() != n {
        return None;
    }
    let sw: f64 = w.iter().sum();
    let sx: f64 = w.iter().zip(xs).map(|(w, x)| w * x).sum();
    let sy: f64 = w.iter().zip(ys).map(|(w, y)| w * y).sum();
    let mx = sx / sw;
    let my = sy / sw;
    let sxx: f64 = (0..n).map(|k| w[k] * (xs[k] - mx).powi(2)).sum();
    let sxy: f64 = (0..n).map(|k| w[k] * (xs[k] - mx) * (ys[k] - my)).sum();
    let syy: f64 = (0..n).map(|k| w[k] * (ys[k] - my).powi(2)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = (0..n)
        .map(|k| w[k] * (ys[k] - intercept - slope * xs[k]).powi(2))
        .sum();
    let scale = if scale_by_residuals {
        if n > 2 {
            rss / (n - 2) as f64
        } else {
            0.0
        }
    } else {
        1.0
    };
    let slope_var = scale / sxx;
    let intercept_var = scale * (1.0 / sw + mx * mx / sxx);
    let r_squared = if syy > 0.0 { (1.0 - rss / syy).clamp(0.0, 1.0) } else { 1.0 };
    Some(LineFit {
        slope,
        intercept,
        slope_stderr: slope_var.sqrt(),
        intercept_stderr: intercept_var.sqrt(),
        r_squared,
        n,
    })
}
