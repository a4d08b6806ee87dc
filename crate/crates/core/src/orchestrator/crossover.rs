use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::output::{num, write_csv, write_json};
use super::sweep::ladder_point;
use crate::error::Result;
use crate::exact1d::exact_observables;
use crate::exponents::{crossover_size, CrossoverEstimate, LadderPoint};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CrossoverReport {
    pub rho: f64,
    pub threshold: f64,
    pub ladder: Vec<LadderPoint>,
    pub estimate: CrossoverEstimate,
    /// `1/ρ_a` from the closed form, the scale the crossover size tracks.
    pub inverse_active_density: Option<f64>,
}

pub fn compute(cfg: &ExperimentConfig) -> Result<CrossoverReport> {
    let l = cfg.require(&cfg.crossover, "crossover")?.clone();
    let rho = l.rho.expect("validated");
    let ladder: Vec<LadderPoint> = l
        .sides
        .par_iter()
        .enumerate()
        .map(|(j, &side)| ladder_point(rho, side, &l, cfg.seed, (j * l.samples) as u64))
        .collect::<Result<_>>()?;
    let estimate = crossover_size(&ladder, l.threshold)?;
    let inverse_active_density = exact_observables(rho).ok().filter(|x| x.rho_a > 0.0).map(|x| 1.0 / x.rho_a);
    Ok(CrossoverReport { rho, threshold: l.threshold, ladder, estimate, inverse_active_density })
}

pub const LADDER_HEADER: &[&str] = &["L", "samples", "absorbed", "p_absorb"];

pub fn write(report: &CrossoverReport, dir: &Path) -> Result<Vec<String>> {
    let rows = report.ladder.iter().map(|p| {
        vec![
            p.side.to_string(),
            p.samples.to_string(),
            p.absorbed.to_string(),
            num(p.absorbed as f64 / p.samples as f64),
        ]
    });
    write_csv(&dir.join("ladder.csv"), LADDER_HEADER, rows)?;
    write_json(&dir.join("crossover.json"), report)?;
    Ok(vec!["ladder.csv".into(), "crossover.json".into()])
}
