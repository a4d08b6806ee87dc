use serde::{Deserialize, Serialize};

use crate::error::{ClgError, Result};
use crate::lattice::{Configuration, Geometry};
use crate::stats::{batch_means, Estimate};

/// Samples below this count produce a profile flagged as unreliable.
pub const MIN_RELIABLE_SAMPLES: usize = 10;

/// All integer offsets with `‖r‖₁ = k`, for `k ≤ max`.
fn shell_offsets(dim: usize, max: usize) -> Vec<Vec<Vec<i64>>> {
    let mut shells = vec![Vec::new(); max + 1];
    let mut cur = vec![0i64; dim];
    fn rec(axis: usize, left: i64, cur: &mut Vec<i64>, shells: &mut Vec<Vec<Vec<i64>>>, max: i64) {
        if axis == cur.len() {
            let norm: i64 = cur.iter().map(|c| c.abs()).sum();
            shells[norm as usize].push(cur.clone());
            return;
        }
        for v in -left..=left {
            cur[axis] = v;
            rec(axis + 1, left - v.abs(), cur, shells, max);
        }
        cur[axis] = 0;
    }
    rec(0, max as i64, &mut cur, &mut shells, max as i64);
    shells
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SampleCorr {
    particles: u64,
    /// `Σ_x η_x η_{x+r e_k}` summed over axes `k`, per lag `r`.
    axial: Vec<u64>,
    /// `Σ_{‖r‖₁=k} Σ_x η_x η_{x+r}` per shell `k`.
    shell: Vec<u64>,
}

/// Accumulates equal-time pair products over a set of periodic samples.
///
/// Products are kept as integer counts, so the estimate is exactly invariant
/// under translating every sample by a common vector.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrelationEstimator {
    dim: usize,
    side: usize,
    volume: usize,
    max_lag: usize,
    offsets: Option<Vec<Vec<Vec<i64>>>>,
    samples: Vec<SampleCorr>,
}

impl CorrelationEstimator {
    /// `shells` enables the `ℓ¹` shell sums needed for the compressibility in
    /// `d ≥ 2`; in one dimension they come for free from the axial lags.
    pub fn new(geometry: &Geometry, max_lag: usize, shells: bool) -> Result<Self> {
        if !geometry.mode().is_periodic() {
            return Err(ClgError::usage("correlations are estimated on periodic lattices"));
        }
        if 2 * max_lag >= geometry.side() {
            return Err(ClgError::usage(format!(
                "max lag {max_lag} must be below L/2 = {}",
                geometry.side() / 2
            )));
        }
        let offsets = (shells && geometry.dim() > 1).then(|| shell_offsets(geometry.dim(), max_lag));
        Ok(CorrelationEstimator {
            dim: geometry.dim(),
            side: geometry.side(),
            volume: geometry.volume(),
            max_lag,
            offsets,
            samples: Vec::new(),
        })
    }

    pub fn max_lag(&self) -> usize {
        self.max_lag
    }

    pub fn sample_count(&self) -> usize {
        self.samples.len()
    }

    pub fn add(&mut self, config: &Configuration) -> Result<()> {
        let g = config.geometry();
        if g.dim() != self.dim || g.side() != self.side || !g.mode().is_periodic() {
            return Err(ClgError::usage("sample geometry differs from the estimator's"));
        }
        let occ = config.occupancy();
        let (l, v) = (self.side, self.volume);
        let mut axial = vec![0u64; self.max_lag + 1];
        let mut stride = v;
        for _axis in 0..self.dim {
            stride /= l;
            for (r, slot) in axial.iter_mut().enumerate() {
                let mut count = 0u64;
                for x in 0..v {
                    if occ[x] == 0 {
                        continue;
                    }
                    let c = (x / stride) % l;
                    let y = if c + r < l { x + r * stride } else { x + r * stride - l * stride };
                    count += occ[y] as u64;
                }
                *slot += count;
            }
        }
        let shell = match &self.offsets {
            None => {
                // One dimension: the shell k ≥ 1 holds the lags ±k, equal by translation.
                axial.iter().enumerate().map(|(k, &a)| if k == 0 { a } else { 2 * a }).collect()
            }
            Some(offsets) => offsets
                .iter()
                .map(|shell| {
                    shell
                        .iter()
                        .map(|r| (0..v).filter(|&x| occ[x] == 1 && occ[g.translate(x, r)] == 1).count() as u64)
                        .sum()
                })
                .collect(),
        };
        self.samples.push(SampleCorr { particles: config.particle_count() as u64, axial, shell });
        Ok(())
    }

    /// Appends the samples of `other`, which must share the geometry and lag.
    pub fn merge(&mut self, other: CorrelationEstimator) -> Result<()> {
        if (other.dim, other.side, other.max_lag, other.offsets.is_some())
            != (self.dim, self.side, self.max_lag, self.offsets.is_some())
        {
            return Err(ClgError::usage("cannot merge correlation estimators of different shapes"));
        }
        self.samples.extend(other.samples);
        Ok(())
    }

    /// Pools the samples into a profile. Standard errors are batch means over
    /// `batches` contiguous groups of samples.
    pub fn finish(&self, batches: usize) -> Result<CorrelationProfile> {
        let s = self.samples.len();
        if s == 0 {
            return Err(ClgError::insufficient("no correlation samples"));
        }
        let v = self.volume as f64;
        let rho_hat = self.samples.iter().map(|x| x.particles as f64).sum::<f64>() / (s as f64 * v);
        // (1/V)Σ_x(η_x-ρ̂)(η_{x+r}-ρ̂) = m(r) - 2ρ̂ρ_s + ρ̂² on a torus.
        let centred = |m: f64, rho_s: f64, n: f64| m / v - n * (2.0 * rho_hat * rho_s - rho_hat * rho_hat);
        let shell_sizes: Vec<usize> = match &self.offsets {
            Some(o) => o.iter().map(|sh| sh.len()).collect(),
            None => (0..=self.max_lag).map(|k| if k == 0 { 1 } else { 2 }).collect(),
        };
        let per_axial: Vec<Vec<f64>> = (0..=self.max_lag)
            .map(|r| {
                self.samples
                    .iter()
                    .map(|x| centred(x.axial[r] as f64 / self.dim as f64, x.particles as f64 / v, 1.0))
                    .collect()
            })
            .collect();
        let per_shell: Vec<Vec<f64>> = (0..=self.max_lag)
            .map(|k| {
                self.samples
                    .iter()
                    .map(|x| centred(x.shell[k] as f64, x.particles as f64 / v, shell_sizes[k] as f64))
                    .collect()
            })
            .collect();
        Ok(CorrelationProfile {
            dim: self.dim,
            rho_hat,
            samples: s,
            batches,
            few_samples: s < MIN_RELIABLE_SAMPLES,
            axial: per_axial.iter().map(|xs| batch_means(xs, batches)).collect(),
            shells: per_shell.iter().map(|xs| batch_means(xs, batches)).collect(),
            shell_sizes,
            per_sample_shell: per_shell,
        })
    }
}

/// Estimated equal-time correlations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationProfile {
    pub dim: usize,
    pub rho_hat: f64,
    pub samples: usize,
    pub batches: usize,
    /// Set when fewer than [`MIN_RELIABLE_SAMPLES`] samples were pooled.
    pub few_samples: bool,
    /// `φ̂(r·e_k)` averaged over axes, for `r = 0..=max_lag`.
    pub axial: Vec<Estimate>,
    /// `Σ_{‖r‖₁=k} φ̂(r)`; entry 0 is `φ̂(0)`.
    pub shells: Vec<Estimate>,
    pub shell_sizes: Vec<usize>,
    #[serde(skip)]
    per_sample_shell: Vec<Vec<f64>>,
}

impl CorrelationProfile {
    /// `(r, φ̂(r))` pairs along the axes, convenient for fitting.
    pub fn axial_points(&self) -> Vec<(f64, Estimate)> {
        self.axial.iter().enumerate().map(|(r, e)| (r as f64, *e)).collect()
    }

    pub fn max_lag(&self) -> usize {
        self.axial.len() - 1
    }
}

/// Compressibility from summed correlations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationChi {
    pub chi: Estimate,
    pub cutoff: usize,
    /// Exponential tail added beyond the cutoff.
    pub tail: f64,
    /// The cutoff lies inside the correlation length (or correlations are
    /// still significant there with no length to extrapolate with).
    pub non_decaying: bool,
}

/// `χ̂ = Σ_{‖r‖₁ ≤ cutoff} φ̂(r)` plus a geometric tail when `xi` is given.
///
/// The tail continues the last shell with ratio `±e^{-1/ξ}`, the sign taken
/// from the last two shells so that alternating one-dimensional correlations
/// are extrapolated correctly.
pub fn compressibility_from_correlations(
    profile: &CorrelationProfile,
    cutoff: usize,
    xi: Option<f64>,
) -> Result<CorrelationChi> {
    if cutoff > profile.max_lag() {
        return Err(ClgError::usage(format!(
            "cutoff {cutoff} exceeds the measured lag range {}",
            profile.max_lag()
        )));
    }
    let per_sample: Vec<f64> = (0..profile.samples)
        .map(|s| (0..=cutoff).map(|k| profile.per_sample_shell[k][s]).sum())
        .collect();
    let truncated = batch_means(&per_sample, profile.batches);
    let last = profile.shells[cutoff];
    let (tail, non_decaying) = match xi {
        Some(xi) if xi > 0.0 && cutoff >= 1 => {
            let prev = profile.shells[cutoff - 1].value;
            let sign = if last.value * prev < 0.0 { -1.0 } else { 1.0 };
            let q = sign * (-1.0 / xi).exp();
            (last.value * q / (1.0 - q), (cutoff as f64) < 3.0 * xi)
        }
        _ => (0.0, last.value.abs() > 3.0 * last.stderr),
    };
    Ok(CorrelationChi {
        chi: Estimate::new(truncated.value + tail, truncated.stderr),
        cutoff,
        tail,
        non_decaying,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{derive_rng, initial_condition, InitialKind, StreamPurpose};
    use std::sync::Arc;

    #[test]
    fn shell_sizes_match_lattice_spheres() {
        let s = shell_offsets(2, 4);
        assert_eq!(s.iter().map(|x| x.len()).collect::<Vec<_>>(), vec![1, 4, 8, 12, 16]);
        let s3 = shell_offsets(3, 2);
        assert_eq!(s3[1].len(), 6);
        assert_eq!(s3[2].len(), 18);
    }

    #[test]
    fn bernoulli_samples_are_uncorrelated() {
        let g = Arc::new(Geometry::periodic(2, 32).unwrap());
        let mut est = CorrelationEstimator::new(&g, 4, true).unwrap();
        let mut rng = derive_rng(3, 0, StreamPurpose::Initial);
        for _ in 0..200 {
            est.add(&initial_condition(&InitialKind::Bernoulli { rho: 0.3 }, g.clone(), &mut rng).unwrap()).unwrap();
        }
        let p = est.finish(20).unwrap();
        assert!(p.axial[0].z_score(0.21).abs() < 4.0);
        for r in 1..=4 {
            assert!(p.axial[r].z_score(0.0).abs() < 4.0, "r={r}: {:?}", p.axial[r]);
            assert!(p.shells[r].z_score(0.0).abs() < 4.0);
        }
        let chi = compressibility_from_correlations(&p, 4, None).unwrap();
        assert!(chi.chi.z_score(0.21).abs() < 4.0, "{chi:?}");
    }

    #[test]
    fn estimator_is_exactly_translation_covariant() {
        let g = Arc::new(Geometry::periodic(2, 12).unwrap());
        let mut a = CorrelationEstimator::new(&g, 5, true).unwrap();
        let mut b = CorrelationEstimator::new(&g, 5, true).unwrap();
        let mut rng = derive_rng(9, 0, StreamPurpose::Initial);
        for _ in 0..5 {
            let c = initial_condition(&InitialKind::Bernoulli { rho: 0.6 }, g.clone(), &mut rng).unwrap();
            let shifted: Vec<u8> = (0..g.volume())
                .map(|x| c.occupancy()[g.translate(x, &[3, -5])])
                .collect();
            a.add(&c).unwrap();
            b.add(&Configuration::from_occupancy(g.clone(), &shifted).unwrap()).unwrap();
        }
        assert_eq!(a.finish(1).unwrap(), b.finish(1).unwrap());
    }

    #[test]
    fn guards() {
        let g = Geometry::periodic(1, 10).unwrap();
        assert!(CorrelationEstimator::new(&g, 5, false).is_err());
        let est = CorrelationEstimator::new(&g, 4, false).unwrap();
        assert!(est.finish(1).is_err());
        let open = Geometry::new(1, 10, crate::lattice::BoundaryMode::Open).unwrap();
        assert!(CorrelationEstimator::new(&open, 2, false).is_err());
    }

    #[test]
    fn few_samples_are_flagged() {
        let g = Arc::new(Geometry::periodic(1, 16).unwrap());
        let mut est = CorrelationEstimator::new(&g, 3, false).unwrap();
        est.add(&Configuration::empty(g)).unwrap();
        assert!(est.finish(1).unwrap().few_samples);
    }
}
