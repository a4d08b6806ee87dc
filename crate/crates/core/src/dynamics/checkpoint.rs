//! Text snapshots sufficient for an exact resume.
//!
//! The format is a single JSON object:
//!
//! ```text
//! { "format": "clg-checkpoint", "version": 1,
//!   "dim": 1, "side": 8, "mode": "periodic",
//!   "occupancy": "01101101",          // one char per site, flat order
//!   "time_bits": 4613937818241073152,  // f64::to_bits of the clock
//!   "events": 12, "jumps": 12,
//!   "rng": { "seed": "<64 hex>", "stream": 0, "word_pos": "1024" },
//!   "edge_keys": [ ... ],              // allowed jumps in storage order
//!   "boundary": null | { "alpha": [...], "left": 0, "right": 0 },
//!   "axis1_flow": [ ... ] }
//! ```
//!
//! The clock is stored as raw bits and the jump set in storage order, because
//! event selection indexes into that order; restoring the set from scratch
//! would give a statistically equivalent but different trajectory.

use std::path::Path;
use std::sync::Arc;

use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use super::rng::SimRng;
use super::state::{BoundarySpec, FaceCounts, SimulationState};
use crate::error::{ClgError, Result};
use crate::lattice::{ActiveEdgeSet, BoundaryMode, Configuration, Geometry};

const FORMAT: &str = "clg-checkpoint";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct RngState {
    seed: String,
    stream: u64,
    word_pos: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct BoundaryState {
    alpha: Vec<f64>,
    left: i64,
    right: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    format: String,
    version: u32,
    dim: usize,
    side: usize,
    mode: BoundaryMode,
    occupancy: String,
    time_bits: u64,
    events: u64,
    jumps: u64,
    rng: RngState,
    edge_keys: Vec<u32>,
    boundary: Option<BoundaryState>,
    axis1_flow: Vec<i64>,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn unhex(s: &str) -> Result<[u8; 32]> {
    let bad = || ClgError::Checkpoint(format!("malformed rng seed `{s}`"));
    if s.len() != 64 {
        return Err(bad());
    }
    let mut out = [0u8; 32];
    for (k, o) in out.iter_mut().enumerate() {
        *o = u8::from_str_radix(&s[2 * k..2 * k + 2], 16).map_err(|_| bad())?;
    }
    Ok(out)
}

impl Checkpoint {
    pub fn capture(state: &SimulationState) -> Self {
        let g = state.config().geometry();
        let rng = state.rng();
        Checkpoint {
            format: FORMAT.into(),
            version: VERSION,
            dim: g.dim(),
            side: g.side(),
            mode: g.mode(),
            occupancy: state.config().occupancy().iter().map(|&v| if v == 1 { '1' } else { '0' }).collect(),
            time_bits: state.time().to_bits(),
            events: state.event_count(),
            jumps: state.jump_count(),
            rng: RngState {
                seed: hex(&rng.get_seed()),
                stream: rng.get_stream(),
                word_pos: rng.get_word_pos().to_string(),
            },
            edge_keys: state.edges().keys().to_vec(),
            boundary: state.boundary_spec().map(|spec| {
                let f = state.face_counts();
                BoundaryState { alpha: spec.alpha().to_vec(), left: f.left, right: f.right }
            }),
            axis1_flow: state.axis1_flow().to_vec(),
        }
    }

    pub fn restore(&self) -> Result<SimulationState> {
        if self.format != FORMAT || self.version != VERSION {
            return Err(ClgError::Checkpoint(format!(
                "unsupported checkpoint {} v{}",
                self.format, self.version
            )));
        }
        let g = Arc::new(Geometry::new(self.dim, self.side, self.mode)?);
        let occ: Vec<u8> = self
            .occupancy
            .chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(ClgError::Checkpoint(format!("bad occupancy character `{other}`"))),
            })
            .collect::<Result<_>>()?;
        let config = Configuration::from_occupancy(g.clone(), &occ)
            .map_err(|e| ClgError::Checkpoint(e.to_string()))?;
        let edges = ActiveEdgeSet::from_keys(&config, self.edge_keys.clone())
            .map_err(|e| ClgError::Checkpoint(e.to_string()))?;
        let mut rng = SimRng::from_seed(unhex(&self.rng.seed)?);
        rng.set_stream(self.rng.stream);
        let word_pos: u128 = self
            .rng
            .word_pos
            .parse()
            .map_err(|_| ClgError::Checkpoint(format!("bad word position `{}`", self.rng.word_pos)))?;
        rng.set_word_pos(word_pos);
        let spec = match &self.boundary {
            Some(b) => Some((BoundarySpec::new(&g, b.alpha.clone())?, FaceCounts { left: b.left, right: b.right })),
            None if g.mode().is_periodic() => None,
            None => return Err(ClgError::Checkpoint("open lattice without boundary data".into())),
        };
        if self.axis1_flow.len() != g.side() {
            return Err(ClgError::Checkpoint("axis-1 flow has wrong length".into()));
        }
        Ok(SimulationState::restore(
            config,
            edges,
            f64::from_bits(self.time_bits),
            self.events,
            rng,
            spec,
            self.axis1_flow.clone(),
            self.jumps,
        ))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("checkpoint serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| ClgError::Checkpoint(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
