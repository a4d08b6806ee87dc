//! Reproducible experiment recipes.
//!
//! A run is fully determined by its [`ExperimentConfig`]: every task draws
//! from its own seeded stream and results are merged in task order, so the
//! outputs do not depend on the number of worker threads.

pub mod boundary;
pub mod config;
pub mod crossover;
pub mod einstein;
pub mod output;
pub mod schema;
pub mod soc;
pub mod stationary;
pub mod sweep;

use std::fs;
use std::path::Path;
use std::time::Instant;

pub use config::{ExperimentConfig, Recipe, REQUIRED_KEYS};
pub use output::{Manifest, TaskCache};

use crate::error::{ClgError, Result};

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "CLG_THREADS";

#[derive(Debug, Clone)]
pub enum Report {
    Stationary(stationary::StationaryReport),
    Einstein(einstein::EinsteinReport),
    Boundary(boundary::BoundaryReport),
    Sweep(sweep::SweepReport),
    Soc(soc::SocReport),
    Crossover(crossover::CrossoverReport),
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: Report,
    pub manifest: Manifest,
}

/// Configured worker count (or all cores), capped by `CLG_THREADS`.
pub fn worker_count(cfg: &ExperimentConfig) -> Result<usize> {
    let mut n = cfg.threads.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let cap: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&c| c > 0)
            .ok_or_else(|| ClgError::usage(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
        n = n.min(cap);
    }
    Ok(n.max(1))
}

fn compute(cfg: &ExperimentConfig, cache: &TaskCache) -> Result<(Report, usize)> {
    Ok(match cfg.recipe {
        Recipe::Stationary | Recipe::Exact1dCheck => {
            let (r, resumed) = stationary::compute(cfg, cache)?;
            (Report::Stationary(r), resumed)
        }
        Recipe::Einstein => (Report::Einstein(einstein::compute(cfg)?), 0),
        Recipe::Boundary | Recipe::CylinderCurrent => (Report::Boundary(boundary::compute(cfg)?), 0),
        Recipe::Sweep => {
            let (r, resumed) = sweep::compute(cfg, cache)?;
            (Report::Sweep(r), resumed)
        }
        Recipe::Soc => (Report::Soc(soc::compute(cfg)?), 0),
        Recipe::Crossover => (Report::Crossover(crossover::compute(cfg)?), 0),
    })
}

fn write_report(cfg: &ExperimentConfig, report: &Report, dir: &Path) -> Result<Vec<String>> {
    match report {
        Report::Stationary(r) => stationary::write(r, dir),
        Report::Einstein(r) => {
            let e = cfg.require(&cfg.einstein, "einstein")?;
            einstein::write(r, e.spacing, e.cutoff, dir)
        }
        Report::Boundary(r) => boundary::write(r, &cfg.geometry()?, dir),
        Report::Sweep(r) => sweep::write(r, dir),
        Report::Soc(r) => soc::write(r, dir),
        Report::Crossover(r) => crossover::write(r, dir),
    }
}

/// Validates `cfg`, runs its recipe on a dedicated thread pool and, when
/// `out` is given, writes the outputs plus `config.toml` and
/// `manifest.json` there. With `resume`, finished tasks cached under
/// `out/tasks` are reused.
pub fn run(cfg: &ExperimentConfig, out: Option<&Path>, resume: bool) -> Result<RunOutput> {
    cfg.validate()?;
    let start = Instant::now();
    let threads = worker_count(cfg)?;
    let cache = match out {
        Some(dir) => TaskCache::new(dir.join("tasks"), resume)?,
        None => TaskCache::disabled(),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| ClgError::Contract(format!("thread pool: {e}")))?;
    let (report, resumed_tasks) = pool.install(|| compute(cfg, &cache))?;
    let config = cfg.to_toml();
    let mut outputs = Vec::new();
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        outputs = write_report(cfg, &report, dir)?;
        fs::write(dir.join("config.toml"), &config)?;
        outputs.push("config.toml".into());
        outputs.push("manifest.json".into());
    }
    let manifest = Manifest {
        tool: "clg".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        recipe: cfg.recipe.name().into(),
        seed: cfg.seed,
        replicas: cfg.replicas,
        threads,
        config,
        outputs,
        resumed_tasks,
        wall_time_seconds: start.elapsed().as_secs_f64(),
    };
    if let Some(dir) = out {
        output::write_json(&dir.join("manifest.json"), &manifest)?;
    }
    Ok(RunOutput { report, manifest })
}
