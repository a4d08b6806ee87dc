//! Space-time correlations and the second-moment spreading check.
//!
//! Everything here works with hyperplane sums `P_s(y) = Σ_{x: x_1 = y} η_x(s)`:
//! the quantities of interest only involve the axis-1 displacement, and for
//! `d = 1` the plane sums are the configuration itself.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{ClgError, Result};
use crate::lattice::Configuration;
use crate::stats::{batch_means, linear_fit, Estimate};

/// Particles per hyperplane `i_1 = y`, `y = 0..L`.
pub fn plane_sums(config: &Configuration) -> Vec<i64> {
    let g = config.geometry();
    let plane = g.plane_size();
    config
        .occupancy()
        .chunks(plane)
        .map(|row| row.iter().map(|&v| v as i64).sum())
        .collect()
}

/// Direct estimate of `Ψ(t, k) = Σ_{i_⊥} ψ̂(t, (k, i_⊥))` from a list of
/// equally spaced plane-sum snapshots.
///
/// `Ψ(lag·Δ, k)` is averaged over all origins `s` with `s + lag` in range, and
/// `ρ̂` is the pooled density. Returns `psi[lag][k + cutoff]`.
pub fn psi_hat(snapshots: &[Vec<i64>], plane: usize, max_lag: usize, cutoff: usize) -> Result<Vec<Vec<f64>>> {
    if snapshots.len() <= max_lag {
        return Err(ClgError::insufficient(format!(
            "{} snapshots cannot cover lag {max_lag}",
            snapshots.len()
        )));
    }
    let l = snapshots[0].len();
    if 2 * cutoff >= l {
        return Err(ClgError::usage("cutoff must be below L/2"));
    }
    let v = (l * plane) as f64;
    let total: i64 = snapshots.iter().map(|p| p.iter().sum::<i64>()).sum();
    let mean_plane = total as f64 / (snapshots.len() * l) as f64;
    let centred: Vec<Vec<f64>> = snapshots
        .iter()
        .map(|p| p.iter().map(|&x| x as f64 - mean_plane).collect())
        .collect();
    let out = (0..=max_lag)
        .map(|lag| {
            let origins = snapshots.len() - lag;
            (0..=2 * cutoff)
                .map(|kk| {
                    let k = kk as i64 - cutoff as i64;
                    let mut acc = 0.0;
                    for s in 0..origins {
                        let (a, b) = (&centred[s + lag], &centred[s]);
                        for y in 0..l {
                            let z = (y as i64 + k).rem_euclid(l as i64) as usize;
                            acc += a[z] * b[y];
                        }
                    }
                    acc / (v * origins as f64)
                })
                .collect()
        })
        .collect();
    Ok(out)
}

/// `Σ_{|k| ≤ c} k² ΔP(y+k)` and `Σ_{|k| ≤ c} ΔP(y+k)` for every `y`, by prefix
/// sums over the unrolled ring. Exact integer arithmetic.
fn windowed_moments(delta: &[i64], cutoff: usize) -> (Vec<i64>, Vec<i64>) {
    let l = delta.len();
    let n = l + 2 * cutoff;
    let mut f0 = vec![0i64; n + 1];
    let mut f1 = vec![0i64; n + 1];
    let mut f2 = vec![0i64; n + 1];
    for z in 0..n {
        let u = delta[(z + l - cutoff % l) % l];
        let zi = z as i64;
        f0[z + 1] = f0[z] + u;
        f1[z + 1] = f1[z] + zi * u;
        f2[z + 1] = f2[z] + zi * zi * u;
    }
    let mut second = Vec::with_capacity(l);
    let mut mass = Vec::with_capacity(l);
    for y in 0..l {
        // Unrolled window [y, y + 2c], centred at m = y + c.
        let (a, b) = (y, y + 2 * cutoff + 1);
        let s0 = f0[b] - f0[a];
        let s1 = f1[b] - f1[a];
        let s2 = f2[b] - f2[a];
        let m = (y + cutoff) as i64;
        second.push(s2 - 2 * m * s1 + m * m * s0);
        mass.push(s0);
    }
    (second, mass)
}

/// Streaming estimator of
/// `lhs(t) = Σ_{|i_1| ≤ c} i_1² [ψ̂(t,i) - ψ̂(0,i)]` and of the matching mass
/// residual `Σ_{|i_1| ≤ c} [ψ̂(t,i) - ψ̂(0,i)]`.
///
/// The difference `ψ̂(t,·) - ψ̂(0,·)` from origin `s` only involves
/// `ΔP = P_{s+t} - P_s`; the `ρ̂` terms cancel because `Σ_y ΔP(y) = 0` on a
/// torus. Snapshots must be pushed at a fixed time spacing.
#[derive(Debug, Clone)]
pub struct EinsteinAccumulator {
    volume: f64,
    spacing: f64,
    max_lag: usize,
    origin_every: usize,
    cutoff: usize,
    pushed: usize,
    ring: VecDeque<(usize, Vec<i64>)>,
    /// Per completed origin: lhs and mass residual for lags `1..=max_lag`.
    rows: Vec<(Vec<f64>, Vec<f64>)>,
    pending: VecDeque<(usize, Vec<f64>, Vec<f64>)>,
}

impl EinsteinAccumulator {
    pub fn new(volume: usize, spacing: f64, max_lag: usize, origin_every: usize, cutoff: usize) -> Result<Self> {
        if max_lag == 0 || origin_every == 0 || !(spacing > 0.0) {
            return Err(ClgError::usage("lag count, origin spacing and snapshot spacing must be positive"));
        }
        Ok(EinsteinAccumulator {
            volume: volume as f64,
            spacing,
            max_lag,
            origin_every,
            cutoff,
            pushed: 0,
            ring: VecDeque::new(),
            rows: Vec::new(),
            pending: VecDeque::new(),
        })
    }

    pub fn push(&mut self, planes: Vec<i64>) -> Result<()> {
        if 2 * self.cutoff >= planes.len() {
            return Err(ClgError::usage("cutoff must be below L/2"));
        }
        let n = self.pushed;
        self.pushed += 1;
        for (origin, lhs, mass) in self.pending.iter_mut() {
            let lag = n - *origin;
            let base = &self.ring.iter().find(|(i, _)| i == origin).expect("origin kept").1;
            let delta: Vec<i64> = planes.iter().zip(base).map(|(a, b)| a - b).collect();
            let (second, m0) = windowed_moments(&delta, self.cutoff);
            let s2: i128 = base.iter().zip(&second).map(|(&p, &w)| p as i128 * w as i128).sum();
            let s0: i128 = base.iter().zip(&m0).map(|(&p, &w)| p as i128 * w as i128).sum();
            lhs[lag - 1] = s2 as f64 / self.volume;
            mass[lag - 1] = s0 as f64 / self.volume;
        }
        while let Some((origin, _, _)) = self.pending.front() {
            if n - origin < self.max_lag {
                break;
            }
            let (_, lhs, mass) = self.pending.pop_front().unwrap();
            self.rows.push((lhs, mass));
        }
        if n % self.origin_every == 0 {
            self.pending.push_back((n, vec![0.0; self.max_lag], vec![0.0; self.max_lag]));
            self.ring.push_back((n, planes));
        }
        let oldest = self.pending.front().map(|p| p.0).unwrap_or(n);
        while self.ring.front().is_some_and(|(i, _)| *i < oldest) {
            self.ring.pop_front();
        }
        Ok(())
    }

    /// Appends the completed origins of another trajectory with the same
    /// settings. Pending origins of `other` are dropped.
    pub fn merge(&mut self, other: EinsteinAccumulator) -> Result<()> {
        if (other.max_lag, other.origin_every, other.cutoff) != (self.max_lag, self.origin_every, self.cutoff)
            || other.spacing != self.spacing
        {
            return Err(ClgError::usage("cannot merge accumulators with different settings"));
        }
        self.rows.extend(other.rows);
        Ok(())
    }

    pub fn origins(&self) -> usize {
        self.rows.len()
    }

    /// Averages over completed origins and fits the slope over lags whose
    /// time lies in `window`. The slope error comes from batch means of the
    /// per-origin slopes, which accounts for correlations across lags.
    pub fn finish(&self, window: (f64, f64), batches: usize) -> Result<EinsteinResult> {
        if self.rows.len() < 2 {
            return Err(ClgError::insufficient(format!(
                "{} completed time origins; the trajectory is too short",
                self.rows.len()
            )));
        }
        let times: Vec<f64> = (1..=self.max_lag).map(|k| k as f64 * self.spacing).collect();
        let col = |lag: usize, pick: fn(&(Vec<f64>, Vec<f64>)) -> &Vec<f64>| -> Estimate {
            let xs: Vec<f64> = self.rows.iter().map(|r| pick(r)[lag]).collect();
            batch_means(&xs, batches)
        };
        let lhs: Vec<Estimate> = (0..self.max_lag).map(|k| col(k, |r| &r.0)).collect();
        let mass: Vec<Estimate> = (0..self.max_lag).map(|k| col(k, |r| &r.1)).collect();
        let idx: Vec<usize> = (0..self.max_lag)
            .filter(|&k| times[k] >= window.0 - 1e-9 && times[k] <= window.1 + 1e-9)
            .collect();
        if idx.len() < 2 {
            return Err(ClgError::insufficient("fewer than two lags in the slope window"));
        }
        let xs: Vec<f64> = idx.iter().map(|&k| times[k]).collect();
        let slopes: Vec<f64> = self
            .rows
            .iter()
            .map(|r| {
                let ys: Vec<f64> = idx.iter().map(|&k| r.0[k]).collect();
                linear_fit(&xs, &ys).expect("distinct lags").slope
            })
            .collect();
        Ok(EinsteinResult {
            times,
            lhs,
            mass_residual: mass,
            slope: batch_means(&slopes, batches),
            window,
            origins: self.rows.len(),
            cutoff: self.cutoff,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EinsteinResult {
    pub times: Vec<f64>,
    pub lhs: Vec<Estimate>,
    pub mass_residual: Vec<Estimate>,
    pub slope: Estimate,
    pub window: (f64, f64),
    pub origins: usize,
    pub cutoff: usize,
}

impl EinsteinResult {
    /// Largest mass residual in units of its standard error; large values
    /// mean the cutoff lets mass leak out of the window.
    pub fn worst_mass_z(&self) -> f64 {
        self.mass_residual.iter().map(|e| e.z_score(0.0).abs()).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{derive_rng, initial_condition, InitialKind, SimulationState, StopCondition, StreamPurpose};
    use crate::lattice::Geometry;
    use std::sync::Arc;

    fn snapshots(dim: usize, side: usize, n: usize, count: usize) -> Vec<Vec<i64>> {
        let g = Arc::new(Geometry::periodic(dim, side).unwrap());
        let c = initial_condition(&InitialKind::UniformN { n }, g, &mut derive_rng(1, 0, StreamPurpose::Initial)).unwrap();
        let mut s = SimulationState::new(c, derive_rng(1, 0, StreamPurpose::Dynamics)).unwrap();
        (0..count)
            .map(|k| {
                s.run_until(StopCondition::at_time(k as f64));
                plane_sums(s.config())
            })
            .collect()
    }

    #[test]
    fn windowed_moments_brute_force() {
        let delta = vec![3, -1, 0, 2, -4, 0, 1, -1];
        let (sec, mass) = windowed_moments(&delta, 2);
        for y in 0..8 {
            let mut s2 = 0;
            let mut s0 = 0;
            for k in -2i64..=2 {
                let v = delta[((y as i64 + k).rem_euclid(8)) as usize];
                s2 += k * k * v;
                s0 += v;
            }
            assert_eq!((sec[y], mass[y]), (s2, s0));
        }
    }

    #[test]
    fn streaming_matches_direct_psi() {
        for (dim, side, n) in [(1usize, 64usize, 44usize), (2, 12, 90)] {
            let snaps = snapshots(dim, side, n, 12);
            let plane = side.pow(dim as u32 - 1);
            let cutoff = 5;
            let mut acc = EinsteinAccumulator::new(side.pow(dim as u32), 1.0, 3, 1, cutoff).unwrap();
            for p in &snaps {
                acc.push(p.clone()).unwrap();
            }
            let res = acc.finish((1.0, 3.0), 1).unwrap();
            assert_eq!(res.origins, 9);
            // Fixed particle number keeps the pooled density identical across
            // the subsets below, so both routes use the same nine origins.
            let psi0 = &psi_hat(&snaps[..9], plane, 0, cutoff).unwrap()[0];
            for lag in 1..=3 {
                let psit = &psi_hat(&snaps[..9 + lag], plane, lag, cutoff).unwrap()[lag];
                let direct: f64 = (0..=2 * cutoff)
                    .map(|kk| {
                        let k = kk as f64 - cutoff as f64;
                        k * k * (psit[kk] - psi0[kk])
                    })
                    .sum();
                assert!((res.lhs[lag - 1].value - direct).abs() < 1e-9, "lag {lag}");
            }
            for k in 1..=cutoff {
                assert!((psi0[cutoff + k] - psi0[cutoff - k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn frozen_state_has_zero_spreading() {
        let side = 32;
        let occ: Vec<i64> = (0..side).map(|i| (i % 2) as i64).collect();
        let mut acc = EinsteinAccumulator::new(side, 1.0, 4, 2, 6).unwrap();
        for _ in 0..20 {
            acc.push(occ.clone()).unwrap();
        }
        let res = acc.finish((1.0, 4.0), 2).unwrap();
        assert!(res.lhs.iter().all(|e| e.value == 0.0));
        assert_eq!(res.slope.value, 0.0);
        assert_eq!(res.worst_mass_z(), 0.0);
    }
}
