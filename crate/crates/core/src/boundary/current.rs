use serde::{Deserialize, Serialize};

use crate::dynamics::FaceCounts;
use crate::stats::{linear_fit, mean_stderr, Estimate};

/// Cumulative face counts sampled at increasing times.
///
/// Both columns count flow in the `-e_1` direction, so a profile decreasing
/// from left to right gives negative slopes.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CurrentLedger {
    /// `(t, J_left, J_right)`.
    pub samples: Vec<(f64, i64, i64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurrentSlope {
    /// Mean rate over sampling intervals, with the spread of interval rates
    /// as its error.
    pub rate: Estimate,
    /// Least-squares slope of the cumulative count, for reference.
    pub fit_slope: f64,
    pub intervals: usize,
}

impl CurrentLedger {
    pub fn record(&mut self, t: f64, faces: FaceCounts) {
        self.samples.push((t, faces.left, faces.right));
    }

    pub fn left(&self) -> Option<CurrentSlope> {
        self.slope(|s| s.1)
    }

    pub fn right(&self) -> Option<CurrentSlope> {
        self.slope(|s| s.2)
    }

    fn slope(&self, pick: impl Fn(&(f64, i64, i64)) -> i64) -> Option<CurrentSlope> {
        if self.samples.len() < 3 {
            return None;
        }
        let rates: Vec<f64> = self
            .samples
            .windows(2)
            .filter(|w| w[1].0 > w[0].0)
            .map(|w| (pick(&w[1]) - pick(&w[0])) as f64 / (w[1].0 - w[0].0))
            .collect();
        let ts: Vec<f64> = self.samples.iter().map(|s| s.0).collect();
        let js: Vec<f64> = self.samples.iter().map(|s| pick(s) as f64).collect();
        let fit = linear_fit(&ts, &js)?;
        Some(CurrentSlope { rate: mean_stderr(&rates), fit_slope: fit.slope, intervals: rates.len() })
    }
}

/// Pools interval rates from several independent ledgers.
pub fn pooled_rate(ledgers: &[CurrentLedger], right_face: bool) -> Option<Estimate> {
    let rates: Vec<f64> = ledgers
        .iter()
        .flat_map(|l| {
            l.samples.windows(2).filter(|w| w[1].0 > w[0].0).map(move |w| {
                let dj = if right_face { w[1].2 - w[0].2 } else { w[1].1 - w[0].1 };
                dj as f64 / (w[1].0 - w[0].0)
            })
        })
        .collect();
    (rates.len() >= 2).then(|| mean_stderr(&rates))
}
