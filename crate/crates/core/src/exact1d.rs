//! Closed-form one-dimensional results.
//!
//! For `ρ > 1/2` the stationary measure of the one-dimensional CLG is a
//! two-state Markov chain: after an occupied site the next one is occupied
//! with probability `ρ_a = (2ρ-1)/ρ`, after an empty site it is always
//! occupied. Every observable then has an explicit expression, which makes
//! this module the reference against which the estimators are validated.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ClgError, Result};
use crate::exponents::ExponentSet;
use crate::stats::Estimate;

/// Exact observables at density `ρ ∈ (1/2, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExactOneDim {
    pub rho: f64,
    pub rho_a: f64,
    pub activity: f64,
    pub diffusion: f64,
    pub compressibility: f64,
    pub conductivity: f64,
    pub xi_cross: f64,
    pub xi_perp: f64,
}

/// Active density `ρ_a(ρ) = (2ρ-1)/ρ`.
pub fn active_density(rho: f64) -> f64 {
    (2.0 * rho - 1.0) / rho
}

pub fn exact_observables(rho: f64) -> Result<ExactOneDim> {
    if !(rho > 0.5 && rho <= 1.0) {
        return Err(ClgError::Domain(format!(
            "one-dimensional closed forms need 1/2 < rho <= 1, got {rho}"
        )));
    }
    let rho_a = active_density(rho);
    Ok(ExactOneDim {
        rho,
        rho_a,
        activity: 2.0 * rho_a * (1.0 - rho),
        diffusion: 1.0 / (rho * rho),
        compressibility: rho * (1.0 - rho) * (2.0 * rho - 1.0),
        conductivity: (1.0 - rho) * (2.0 * rho - 1.0) / rho,
        xi_cross: -1.0 / (1.0 - rho_a).ln(),
        xi_perp: 1.0 / rho_a,
    })
}

/// Two-point function `φ(0,i) = ρ(1-ρ)(ρ_a-1)^i`.
pub fn two_point(rho: f64, lag: u32) -> f64 {
    rho * (1.0 - rho) * (active_density(rho) - 1.0).powi(lag as i32)
}

/// True when no two neighbouring sites of the window are both empty.
pub fn is_ergodic(pattern: &[u8]) -> bool {
    pattern.windows(2).all(|w| w[0] + w[1] >= 1)
}

/// Stationary probability of observing `pattern` on `⟦1,ℓ⟧`:
/// `(1-ρ) ρ_a^{2p-ℓ+1-σ_1-σ_ℓ} (1-ρ_a)^{ℓ-1-p}` on ergodic patterns, 0 otherwise.
pub fn window_probability(rho: f64, pattern: &[u8]) -> f64 {
    let l = pattern.len() as i32;
    if l == 0 || !is_ergodic(pattern) {
        return if l == 0 { 1.0 } else { 0.0 };
    }
    let ra = active_density(rho);
    let p: i32 = pattern.iter().map(|&v| v as i32).sum();
    let e1 = 2 * p - l + 1 - pattern[0] as i32 - pattern[l as usize - 1] as i32;
    let e2 = l - 1 - p;
    (1.0 - rho) * ra.powi(e1) * (1.0 - ra).powi(e2)
}

fn check_sampler_density(rho: f64) -> Result<f64> {
    if !(rho > 0.5 && rho < 1.0) {
        return Err(ClgError::Domain(format!("sampler needs 1/2 < rho < 1, got {rho}")));
    }
    Ok(active_density(rho))
}

/// Marginal on `⟦1,len⟧` of the stationary measure on `ℤ` (not periodic):
/// `η_1 ~ Ber(ρ)`, then the chain.
pub fn sample_pi_rho<R: Rng + ?Sized>(rho: f64, len: usize, rng: &mut R) -> Result<Vec<u8>> {
    let ra = check_sampler_density(rho)?;
    if len < 2 {
        return Err(ClgError::usage("sample length must be at least 2"));
    }
    let mut out = Vec::with_capacity(len);
    let mut prev = rng.random_bool(rho);
    out.push(prev as u8);
    for _ in 1..len {
        prev = !prev || rng.random_bool(ra);
        out.push(prev as u8);
    }
    Ok(out)
}

/// Sample of the chain closed on a ring of `len` sites.
///
/// The periodic law weights a configuration by the product of transition
/// probabilities around the whole ring. A linear sample already carries all
/// but the wrap factor `T(η_L, η_1)`, with `η_1` drawn from the stationary
/// marginal; accepting it with probability `ρ·T(η_L,η_1)/π(η_1)` (which is
/// `ρ_a`, `1`, `1` or `0`) makes the accepted sample exact.
pub fn sample_pi_rho_torus<R: Rng + ?Sized>(rho: f64, len: usize, rng: &mut R) -> Result<Vec<u8>> {
    let ra = check_sampler_density(rho)?;
    loop {
        let s = sample_pi_rho(rho, len, rng)?;
        let accept = match (s[len - 1], s[0]) {
            (1, 1) => ra,
            (0, 0) => 0.0,
            _ => 1.0,
        };
        if accept >= 1.0 || (accept > 0.0 && rng.random_bool(accept)) {
            return Ok(s);
        }
    }
}

/// Uniform sample among ring configurations of `len` sites with exactly
/// `particles` particles and no two adjacent empty sites. This is the
/// stationary measure at fixed particle number.
pub fn sample_canonical_ring<R: Rng + ?Sized>(len: usize, particles: usize, rng: &mut R) -> Result<Vec<u8>> {
    if len < 2 || particles > len || 2 * particles < len {
        return Err(ClgError::usage(format!(
            "no ergodic ring configuration with {particles} particles on {len} sites"
        )));
    }
    let holes = len - particles;
    // Each particle is followed by at most one hole: pick which ones, then
    // rotate uniformly. Every configuration arises from exactly `particles`
    // (choice, rotation) pairs.
    let mut followed = vec![false; particles];
    for k in sample(rng, particles, holes) {
        followed[k] = true;
    }
    let mut line = Vec::with_capacity(len);
    for f in followed {
        line.push(1u8);
        if f {
            line.push(0);
        }
    }
    let shift = rng.random_range(0..len);
    line.rotate_right(shift);
    Ok(line)
}

/// Exact one-dimensional exponents: `β = b = γ = ν_× = ν_⊥ = 1`, `α = ζ = 0`,
/// `ρ_c = 1/2`.
pub fn exact_exponents() -> ExponentSet {
    let one = Some(Estimate::exact(1.0));
    let zero = Some(Estimate::exact(0.0));
    ExponentSet {
        rho_c: Some(Estimate::exact(0.5)),
        beta: one,
        b: one,
        alpha: zero,
        gamma: one,
        nu_cross: one,
        nu_perp: one,
        zeta: zero,
        z: None,
        theta: None,
    }
}
