//! Experiment configuration in TOML.
//!
//! Required keys: `recipe`, `seed`, and `[geometry]` with `dim`, `side`,
//! `mode`. Every other section is optional and only read by the recipes that
//! need it:
//!
//! | section        | keys                                                                       |
//! |----------------|----------------------------------------------------------------------------|
//! | top level      | `recipe`, `seed`, `replicas`, `threads`                                    |
//! | `[geometry]`   | `dim`, `side`, `mode` (`periodic`, `open`, `cylinder`)                     |
//! | `[initial]`    | `kind` plus the parameters of that kind (`n`, `rho`, `m`)                  |
//! | `[run]`        | `burn_in_events`, `snapshots`, `interval`, `batches`                       |
//! | `[analysis]`   | `max_lag`, `box_sizes`, `xi_window`, `significance`                        |
//! | `[einstein]`   | `spacing`, `max_lag`, `origin_every`, `cutoff`, `window`, `duration`       |
//! | `[boundary]`   | `left`, `right`, `coupling`, `burn_in`, `windows`, `window_time`           |
//! | `[sweep]`      | `rhos`, `rho_c`, `fit_window`                                              |
//! | `[sweep.ladder]` / `[crossover]` | `rho`, `sides`, `samples`, `time_factor`, `threshold`    |
//! | `[sweep.zeta]` | `side`, `samples`, `box_sizes`                                             |
//! | `[soc]`        | `block`, `event_cap`                                                       |
//! | `[soc.quasi]`  | `side`, `offsets`, `windows`, `window_time`, `replicas`, `max_restarts`   |
//!
//! Any key may be overridden from the command line with `--set path=value`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::boundary::Coupling;
use crate::dynamics::InitialKind;
use crate::error::{ClgError, Result};
use crate::lattice::{BoundaryMode, Geometry};

pub const REQUIRED_KEYS: &[&str] = &["recipe", "seed", "geometry.dim", "geometry.side", "geometry.mode"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Recipe {
    /// Stationary observables on a torus.
    Stationary,
    /// One-dimensional stationary run compared against closed forms.
    Exact1dCheck,
    /// Space-time correlations and the spreading identity.
    Einstein,
    /// Reservoir-driven profile and currents on an open box or cylinder.
    Boundary,
    /// [`Recipe::Boundary`] restricted to the cylinder.
    CylinderCurrent,
    /// Density sweep with exponent fits.
    Sweep,
    /// Spreading block experiment for the critical density.
    Soc,
    /// Absorption ladder for the crossover size.
    Crossover,
}

impl Recipe {
    pub fn name(self) -> &'static str {
        match self {
            Recipe::Stationary => "stationary",
            Recipe::Exact1dCheck => "exact1d-check",
            Recipe::Einstein => "einstein",
            Recipe::Boundary => "boundary",
            Recipe::CylinderCurrent => "cylinder-current",
            Recipe::Sweep => "sweep",
            Recipe::Soc => "soc",
            Recipe::Crossover => "crossover",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub dim: usize,
    pub side: usize,
    pub mode: BoundaryMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Events discarded before measuring; defaults to `10·L^d`.
    pub burn_in_events: Option<u64>,
    pub snapshots: usize,
    /// Time between snapshots.
    pub interval: f64,
    #[serde(default = "default_batches")]
    pub batches: usize,
}

fn default_batches() -> usize {
    20
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    pub max_lag: usize,
    #[serde(default)]
    pub box_sizes: Vec<usize>,
    /// Lag window for the correlation length; the upper end is cut further
    /// where correlations stop being significant.
    pub xi_window: Option<(f64, f64)>,
    /// Significance multiple for that cut.
    #[serde(default = "default_significance")]
    pub significance: f64,
}

fn default_significance() -> f64 {
    3.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EinsteinConfig {
    pub spacing: f64,
    pub max_lag: usize,
    pub origin_every: usize,
    pub cutoff: usize,
    pub window: (f64, f64),
    /// Length of the measured trajectory after burn-in.
    pub duration: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryConfig {
    pub left: f64,
    pub right: f64,
    /// Coupling of the written Dirichlet solution. The default matches the
    /// dynamics, which resample each boundary site at rate 1.
    #[serde(default = "dynamics_coupling")]
    pub coupling: Coupling,
    pub burn_in: f64,
    pub windows: usize,
    pub window_time: f64,
}

fn dynamics_coupling() -> Coupling {
    Coupling::PerSite
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LadderConfig {
    /// Only for the standalone crossover recipe; sweeps use their grid.
    pub rho: Option<f64>,
    pub sides: Vec<usize>,
    pub samples: usize,
    /// Time cap in units of `L²`.
    #[serde(default = "default_time_factor")]
    pub time_factor: f64,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

fn default_time_factor() -> f64 {
    10.0
}

fn default_threshold() -> f64 {
    0.5
}

/// Critical frozen states for the hyperuniformity exponent: rings at half
/// filling run to absorption.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZetaConfig {
    pub side: usize,
    pub samples: u64,
    pub box_sizes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub rhos: Vec<f64>,
    pub rho_c: f64,
    pub fit_window: (f64, f64),
    pub ladder: Option<LadderConfig>,
    pub zeta: Option<ZetaConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuasiConfig {
    pub side: usize,
    /// Densities above the measured critical density.
    pub offsets: Vec<f64>,
    #[serde(default = "default_burn_factor")]
    pub burn_in_factor: f64,
    pub windows: usize,
    pub window_time: f64,
    /// Independent runs per offset.
    #[serde(default = "default_quasi_replicas")]
    pub replicas: u64,
    #[serde(default = "default_max_restarts")]
    pub max_restarts: usize,
}

fn default_quasi_replicas() -> u64 {
    10
}

fn default_max_restarts() -> usize {
    20
}

fn default_burn_factor() -> f64 {
    10.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SocConfig {
    pub block: usize,
    /// Events per spreading run before it is cut off as not absorbed.
    #[serde(default = "default_event_cap")]
    pub event_cap: u64,
    pub quasi: Option<QuasiConfig>,
}

fn default_event_cap() -> u64 {
    2_000_000_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub recipe: Recipe,
    pub seed: u64,
    #[serde(default = "default_replicas")]
    pub replicas: u64,
    /// Worker count; `CLG_THREADS` caps it.
    pub threads: Option<usize>,
    pub geometry: GeometryConfig,
    pub initial: Option<InitialKind>,
    pub run: Option<RunConfig>,
    pub analysis: Option<AnalysisConfig>,
    pub einstein: Option<EinsteinConfig>,
    pub boundary: Option<BoundaryConfig>,
    pub sweep: Option<SweepConfig>,
    pub crossover: Option<LadderConfig>,
    pub soc: Option<SocConfig>,
}

fn default_replicas() -> u64 {
    1
}

/// 1-based line and column of a byte offset.
fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |s| s.chars().count()) + 1;
    (line, col)
}

fn required_list() -> String {
    REQUIRED_KEYS.join(", ")
}

fn toml_error(text: &str, e: toml::de::Error) -> ClgError {
    let msg = e.message().to_string();
    let place = match e.span() {
        Some(span) => {
            let (l, c) = line_col(text, span.start);
            format!("line {l}, column {c}: ")
        }
        None => String::new(),
    };
    // Only top-level omissions get the list; a section names its own field.
    let top_level = REQUIRED_KEYS.iter().any(|k| msg.contains(&format!("`{}`", k.rsplit('.').next().unwrap())));
    let hint = if msg.starts_with("missing field") && top_level {
        format!(" (required keys: {})", required_list())
    } else {
        String::new()
    };
    ClgError::Config(format!("{place}{msg}{hint}"))
}

impl ExperimentConfig {
    /// Parses and validates a config.
    pub fn from_toml(text: &str) -> Result<Self> {
        if text.trim().is_empty() {
            return Err(ClgError::usage(format!("empty config; required keys: {}", required_list())));
        }
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| toml_error(text, e))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parses `text`, applies `path=value` overrides, then validates.
    pub fn from_toml_with_overrides(text: &str, overrides: &[String]) -> Result<Self> {
        if overrides.is_empty() {
            return Self::from_toml(text);
        }
        let mut table: toml::Table = text.parse().map_err(|e| toml_error(text, e))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        Self::from_toml(&toml::to_string(&table).map_err(|e| ClgError::Config(e.to_string()))?)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_with_overrides(&text, overrides)
            .map_err(|e| match e {
                ClgError::Config(m) => ClgError::Config(format!("{}: {m}", path.display())),
                other => other,
            })
    }

    /// Canonical serialization; parsing it back yields the same text.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is serializable")
    }

    pub fn geometry(&self) -> Result<Geometry> {
        Geometry::new(self.geometry.dim, self.geometry.side, self.geometry.mode)
    }

    pub fn require<'a, T>(&self, section: &'a Option<T>, name: &str) -> Result<&'a T> {
        section.as_ref().ok_or_else(|| {
            ClgError::Config(format!("recipe `{}` needs a [{name}] section", self.recipe.name()))
        })
    }

    /// Checks every precondition the recipe will rely on, before any work.
    pub fn validate(&self) -> Result<()> {
        let g = self.geometry().map_err(|e| ClgError::Config(format!("[geometry]: {e}")))?;
        let bad = |field: &str, msg: String| Err(ClgError::Config(format!("{field}: {msg}")));
        if self.replicas == 0 {
            return bad("replicas", "must be at least 1".into());
        }
        if self.threads == Some(0) {
            return bad("threads", "must be at least 1".into());
        }
        let periodic = g.mode().is_periodic();
        let half = g.side() / 2;
        match self.recipe {
            Recipe::Stationary | Recipe::Exact1dCheck | Recipe::Einstein => {
                if !periodic {
                    return bad("geometry.mode", format!("recipe `{}` runs on a periodic lattice", self.recipe.name()));
                }
                let init = self.require(&self.initial, "initial")?;
                check_initial(init, &g)?;
                if self.recipe == Recipe::Exact1dCheck && g.dim() != 1 {
                    return bad("geometry.dim", "exact1d-check is one-dimensional".into());
                }
                if self.recipe == Recipe::Einstein {
                    let e = self.require(&self.einstein, "einstein")?;
                    if !(e.spacing > 0.0) || e.max_lag == 0 || e.origin_every == 0 {
                        return bad("einstein", "spacing, max_lag and origin_every must be positive".into());
                    }
                    if 2 * e.cutoff >= g.side() {
                        return bad("einstein.cutoff", format!("must be below L/2 = {half}"));
                    }
                    if !(e.window.1 > e.window.0) || e.window.1 > e.max_lag as f64 * e.spacing {
                        return bad("einstein.window", "must be increasing and within the lag range".into());
                    }
                    if e.duration < (e.max_lag + 2 * e.origin_every) as f64 * e.spacing {
                        return bad("einstein.duration", "too short for two complete time origins".into());
                    }
                } else {
                    let r = self.require(&self.run, "run")?;
                    if r.snapshots == 0 || !(r.interval > 0.0) {
                        return bad("run", "snapshots and interval must be positive".into());
                    }
                    let a = self.require(&self.analysis, "analysis")?;
                    check_analysis(a, &g)?;
                }
            }
            Recipe::Boundary | Recipe::CylinderCurrent => {
                if periodic {
                    return bad("geometry.mode", "boundary recipes need an open or cylinder lattice".into());
                }
                if self.recipe == Recipe::CylinderCurrent && g.mode() != BoundaryMode::Cylinder {
                    return bad("geometry.mode", "cylinder-current needs mode = \"cylinder\"".into());
                }
                let b = self.require(&self.boundary, "boundary")?;
                for (name, v) in [("boundary.left", b.left), ("boundary.right", b.right)] {
                    if !(v > 0.0 && v < 1.0) {
                        return bad(name, format!("reservoir density {v} not in (0,1)"));
                    }
                }
                if b.windows < 4 || !(b.window_time > 0.0) || !(b.burn_in >= 0.0) {
                    return bad("boundary", "need windows >= 4, window_time > 0, burn_in >= 0".into());
                }
            }
            Recipe::Sweep => {
                if !periodic {
                    return bad("geometry.mode", "sweeps run on a periodic lattice".into());
                }
                let s = self.require(&self.sweep, "sweep")?;
                if s.rhos.is_empty() {
                    return bad("sweep.rhos", "empty density grid".into());
                }
                if s.rhos.windows(2).any(|w| w[1] <= w[0]) {
                    return bad("sweep.rhos", "grid must be strictly increasing".into());
                }
                if s.rhos[0] <= s.rho_c || *s.rhos.last().unwrap() >= 1.0 {
                    return bad("sweep.rhos", format!("grid must lie in (rho_c, 1) = ({}, 1)", s.rho_c));
                }
                let r = self.require(&self.run, "run")?;
                if r.snapshots == 0 || !(r.interval > 0.0) {
                    return bad("run", "snapshots and interval must be positive".into());
                }
                check_analysis(self.require(&self.analysis, "analysis")?, &g)?;
                if let Some(l) = &s.ladder {
                    check_ladder(l, "sweep.ladder", g.dim())?;
                }
                if let Some(z) = &s.zeta {
                    if z.side % 2 != 0 || z.samples == 0 {
                        return bad("sweep.zeta", "side must be even and samples positive".into());
                    }
                    if z.box_sizes.is_empty() || z.box_sizes.iter().any(|&r| r == 0 || r > z.side / 2) {
                        return bad("sweep.zeta.box_sizes", format!("sizes must lie in 1..={}", z.side / 2));
                    }
                }
            }
            Recipe::Soc => {
                if !periodic {
                    return bad("geometry.mode", "the spreading experiment runs on a periodic lattice".into());
                }
                let s = self.require(&self.soc, "soc")?;
                if s.block == 0 || s.block + 2 > g.side() {
                    return bad("soc.block", format!("must lie in 1..={}", g.side().saturating_sub(2)));
                }
                if let Some(q) = &s.quasi {
                    if q.side < 4 || q.offsets.is_empty() || q.windows == 0 || !(q.window_time > 0.0) || q.replicas == 0 {
                        return bad("soc.quasi", "need side >= 4, offsets, windows, window_time and replicas".into());
                    }
                }
            }
            Recipe::Crossover => {
                if !periodic {
                    return bad("geometry.mode", "absorption ladders run on a periodic lattice".into());
                }
                let l = self.require(&self.crossover, "crossover")?;
                check_ladder(l, "crossover", g.dim())?;
                match l.rho {
                    Some(r) if r > 0.0 && r < 1.0 => {}
                    _ => return bad("crossover.rho", "density in (0,1) required".into()),
                }
            }
        }
        Ok(())
    }
}

fn check_initial(init: &InitialKind, g: &Geometry) -> Result<()> {
    let v = g.volume();
    let msg = match *init {
        InitialKind::UniformN { n } | InitialKind::Canonical1d { n } if n > v => {
            Some(format!("n = {n} exceeds the volume {v}"))
        }
        InitialKind::Bernoulli { rho } | InitialKind::GrandCanonical1d { rho } | InitialKind::StationaryWindow1d { rho }
            if !(rho > 0.0 && rho < 1.0) =>
        {
            Some(format!("rho = {rho} not in (0,1)"))
        }
        InitialKind::CenteredBlock { m } if m == 0 || m > g.side() => Some(format!("block side {m} out of range")),
        InitialKind::GrandCanonical1d { .. } | InitialKind::Canonical1d { .. } | InitialKind::StationaryWindow1d { .. }
            if g.dim() != 1 =>
        {
            Some(format!("{init} needs dim = 1"))
        }
        _ => None,
    };
    match msg {
        Some(m) => Err(ClgError::Config(format!("initial: {m}"))),
        None => Ok(()),
    }
}

fn check_analysis(a: &AnalysisConfig, g: &Geometry) -> Result<()> {
    let half = g.side() / 2;
    if 2 * a.max_lag >= g.side() {
        return Err(ClgError::Config(format!("analysis.max_lag: must be below L/2 = {half}")));
    }
    if a.box_sizes.iter().any(|&r| r == 0 || r > half) {
        return Err(ClgError::Config(format!("analysis.box_sizes: sizes must lie in 1..={half}")));
    }
    Ok(())
}

fn check_ladder(l: &LadderConfig, name: &str, dim: usize) -> Result<()> {
    if dim != 1 {
        return Err(ClgError::Config(format!("{name}: the stationary-window ladder is one-dimensional")));
    }
    if l.sides.len() < 2 || l.sides.windows(2).any(|w| w[1] <= w[0]) || l.sides[0] < 2 {
        return Err(ClgError::Config(format!("{name}.sides: need at least two increasing sides >= 2")));
    }
    if l.samples == 0 || !(l.time_factor > 0.0) || !(l.threshold > 0.0 && l.threshold < 1.0) {
        return Err(ClgError::Config(format!("{name}: samples > 0, time_factor > 0, threshold in (0,1)")));
    }
    Ok(())
}

/// Sets `a.b.c = value` in a TOML table. The value is parsed as TOML and
/// taken as a bare string if that fails.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| ClgError::usage(format!("override `{assignment}` is not of the form key=value")))?;
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.trim().to_string()));
    let keys: Vec<&str> = path.trim().split('.').collect();
    let mut cur = table;
    for k in &keys[..keys.len() - 1] {
        let entry = cur.entry(k.to_string()).or_insert_with(|| toml::Value::Table(Default::default()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| ClgError::usage(format!("override `{path}`: `{k}` is not a section")))?;
    }
    cur.insert(keys[keys.len() - 1].to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const STATIONARY: &str = r#"
recipe = "exact1d-check"
seed = 7
replicas = 2

[geometry]
dim = 1
side = 256
mode = "periodic"

[initial]
kind = "canonical-1d"
n = 192

[run]
snapshots = 50
interval = 5.0

[analysis]
max_lag = 12
box_sizes = [4, 8, 16, 32, 64]
"#;

    #[test]
    fn round_trip_is_byte_identical() {
        let c = ExperimentConfig::from_toml(STATIONARY).unwrap();
        let text = c.to_toml();
        let again = ExperimentConfig::from_toml(&text).unwrap();
        assert_eq!(again, c);
        assert_eq!(again.to_toml(), text);
    }

    #[test]
    fn empty_config_lists_required_keys() {
        for text in ["", "  \n"] {
            let e = ExperimentConfig::from_toml(text).unwrap_err().to_string();
            for k in REQUIRED_KEYS {
                assert!(e.contains(k), "{e}");
            }
        }
        let e = ExperimentConfig::from_toml("seed = 1\n").unwrap_err().to_string();
        assert!(e.contains("recipe") && e.contains("geometry.side"), "{e}");
    }

    #[test]
    fn errors_carry_line_and_column() {
        let text = STATIONARY.replace("side = 256", "side = \"big\"");
        let e = ExperimentConfig::from_toml(&text).unwrap_err().to_string();
        assert!(e.contains("line 8, column 8"), "{e}");
        let text = STATIONARY.replace("interval = 5.0", "interval = 5.0\ncadence = 2");
        let e = ExperimentConfig::from_toml(&text).unwrap_err().to_string();
        assert!(e.contains("cadence") && e.contains("line 18, column 1"), "{e}");
    }

    #[test]
    fn preconditions_are_checked_before_launch() {
        let e = ExperimentConfig::from_toml(&STATIONARY.replace("max_lag = 12", "max_lag = 200"));
        assert!(e.unwrap_err().to_string().contains("analysis.max_lag"));
        let e = ExperimentConfig::from_toml(&STATIONARY.replace("n = 192", "n = 999"));
        assert!(e.unwrap_err().to_string().contains("initial"));
        let e = ExperimentConfig::from_toml(&STATIONARY.replace("[run]\nsnapshots = 50\ninterval = 5.0\n", ""));
        assert!(e.unwrap_err().to_string().contains("[run]"));
    }

    #[test]
    fn overrides_replace_keys_one_for_one() {
        let c = ExperimentConfig::from_toml_with_overrides(
            STATIONARY,
            &["seed=99".into(), "geometry.side=512".into(), "initial.n=300".into()],
        )
        .unwrap();
        assert_eq!(c.seed, 99);
        assert_eq!(c.geometry.side, 512);
        assert_eq!(c.initial, Some(InitialKind::Canonical1d { n: 300 }));
        assert!(ExperimentConfig::from_toml_with_overrides(STATIONARY, &["seed".into()]).is_err());
    }
}
