use std::fmt;
use std::sync::Arc;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ClgError, Result};
use crate::exact1d::{sample_canonical_ring, sample_pi_rho, sample_pi_rho_torus};
use crate::lattice::{Configuration, Geometry};

/// Law of the initial configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InitialKind {
    /// `n` sites drawn uniformly without replacement.
    UniformN { n: usize },
    /// Independent Bernoulli(ρ) occupation.
    Bernoulli { rho: f64 },
    /// Sites with even coordinate sum.
    Chessboard,
    /// Every site occupied.
    Full,
    /// Fully occupied cube of side `m` centred in an empty lattice.
    CenteredBlock { m: usize },
    /// One-dimensional stationary measure at density ρ (grand canonical).
    #[serde(rename = "grand-canonical-1d")]
    GrandCanonical1d { rho: f64 },
    /// One-dimensional stationary measure at fixed particle number `n`:
    /// uniform over ring configurations without two adjacent holes.
    #[serde(rename = "canonical-1d")]
    Canonical1d { n: usize },
    /// A window of the infinite-volume one-dimensional measure placed on the
    /// lattice as is. On a ring the wrap edge is not conditioned, so the
    /// state is typical locally but may be absorbable.
    #[serde(rename = "stationary-window-1d")]
    StationaryWindow1d { rho: f64 },
}

impl fmt::Display for InitialKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialKind::UniformN { n } => write!(f, "uniform-n({n})"),
            InitialKind::Bernoulli { rho } => write!(f, "bernoulli({rho})"),
            InitialKind::Chessboard => write!(f, "chessboard"),
            InitialKind::Full => write!(f, "full"),
            InitialKind::CenteredBlock { m } => write!(f, "centered-block({m})"),
            InitialKind::GrandCanonical1d { rho } => write!(f, "grand-canonical-1d({rho})"),
            InitialKind::Canonical1d { n } => write!(f, "canonical-1d({n})"),
            InitialKind::StationaryWindow1d { rho } => write!(f, "stationary-window-1d({rho})"),
        }
    }
}

fn need_1d(g: &Geometry, kind: &InitialKind) -> Result<()> {
    if g.dim() != 1 {
        return Err(ClgError::usage(format!("{kind} needs a one-dimensional lattice, got d = {}", g.dim())));
    }
    Ok(())
}

/// Draws an initial configuration of the requested law.
pub fn initial_condition<R: Rng + ?Sized>(
    kind: &InitialKind,
    geometry: Arc<Geometry>,
    rng: &mut R,
) -> Result<Configuration> {
    let g = geometry.as_ref();
    let volume = g.volume();
    let occ: Vec<u8> = match *kind {
        InitialKind::UniformN { n } => {
            if n > volume {
                return Err(ClgError::usage(format!("cannot place {n} particles on {volume} sites")));
            }
            let mut occ = vec![0u8; volume];
            for s in sample(rng, volume, n) {
                occ[s] = 1;
            }
            occ
        }
        InitialKind::Bernoulli { rho } => {
            if !(0.0..=1.0).contains(&rho) {
                return Err(ClgError::usage(format!("density {rho} not in [0,1]")));
            }
            (0..volume).map(|_| rng.random_bool(rho) as u8).collect()
        }
        InitialKind::Chessboard => (0..volume)
            .map(|s| (g.coords_of(s).iter().sum::<usize>() % 2 == 0) as u8)
            .collect(),
        InitialKind::Full => vec![1; volume],
        InitialKind::CenteredBlock { m } => {
            if m == 0 || m > g.side() {
                return Err(ClgError::usage(format!("block side {m} must lie in 1..={}", g.side())));
            }
            let lo = (g.side() - m) / 2 + 1;
            (0..volume)
                .map(|s| g.coords_of(s).iter().all(|&c| c >= lo && c < lo + m) as u8)
                .collect()
        }
        InitialKind::GrandCanonical1d { rho } => {
            need_1d(g, kind)?;
            if g.mode().is_periodic() {
                sample_pi_rho_torus(rho, volume, rng)?
            } else {
                sample_pi_rho(rho, volume, rng)?
            }
        }
        InitialKind::Canonical1d { n } => {
            need_1d(g, kind)?;
            if !g.mode().is_periodic() {
                return Err(ClgError::usage("canonical-1d is defined on a ring"));
            }
            sample_canonical_ring(volume, n, rng)?
        }
        InitialKind::StationaryWindow1d { rho } => {
            need_1d(g, kind)?;
            sample_pi_rho(rho, volume, rng)?
        }
    };
    Configuration::from_occupancy(geometry, &occ)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::rng::{derive_rng, StreamPurpose};
    use crate::lattice::{allowed_jumps, BoundaryMode};
    use crate::stats::mean_stderr;

    fn rng() -> crate::dynamics::SimRng {
        derive_rng(11, 0, StreamPurpose::Initial)
    }

    #[test]
    fn chessboard_is_frozen_at_half_density() {
        let g = Arc::new(Geometry::periodic(2, 8).unwrap());
        let c = initial_condition(&InitialKind::Chessboard, g, &mut rng()).unwrap();
        assert_eq!(c.density(), 0.5);
        assert!(allowed_jumps(&c).is_empty());
    }

    #[test]
    fn centered_block_shape() {
        let g = Arc::new(Geometry::periodic(2, 10).unwrap());
        let c = initial_condition(&InitialKind::CenteredBlock { m: 4 }, g.clone(), &mut rng()).unwrap();
        assert_eq!(c.particle_count(), 16);
        for s in 0..g.volume() {
            let x = g.coords_of(s);
            let inside = (4..=7).contains(&x[0]) && (4..=7).contains(&x[1]);
            assert_eq!(c.is_occupied(s), inside, "{x:?}");
        }
        assert!(initial_condition(&InitialKind::CenteredBlock { m: 11 }, g, &mut rng()).is_err());
    }

    #[test]
    fn uniform_n_and_guards() {
        let g = Arc::new(Geometry::new(3, 4, BoundaryMode::Open).unwrap());
        let c = initial_condition(&InitialKind::UniformN { n: 20 }, g.clone(), &mut rng()).unwrap();
        assert_eq!(c.particle_count(), 20);
        assert!(initial_condition(&InitialKind::UniformN { n: 65 }, g.clone(), &mut rng()).is_err());
        assert!(initial_condition(&InitialKind::GrandCanonical1d { rho: 0.75 }, g, &mut rng()).is_err());
    }

    #[test]
    fn grand_canonical_density() {
        let len = 1_000_000;
        let g = Arc::new(Geometry::periodic(1, len).unwrap());
        let c = initial_condition(&InitialKind::GrandCanonical1d { rho: 0.75 }, g, &mut rng()).unwrap();
        // Block means of 1000 sites are nearly independent (correlation
        // length below one site).
        let blocks: Vec<f64> = c
            .occupancy()
            .chunks(1000)
            .map(|b| b.iter().map(|&v| v as f64).sum::<f64>() / 1000.0)
            .collect();
        let e = mean_stderr(&blocks);
        assert!(e.z_score(0.75).abs() < 3.0, "{e:?}");
    }

    #[test]
    fn canonical_ring_has_exact_count() {
        let g = Arc::new(Geometry::periodic(1, 64).unwrap());
        let c = initial_condition(&InitialKind::Canonical1d { n: 48 }, g, &mut rng()).unwrap();
        assert_eq!(c.particle_count(), 48);
        let occ = c.occupancy();
        assert!((0..64).all(|i| occ[i] + occ[(i + 1) % 64] >= 1));
    }
}
