//! Column contracts of every CSV the recipes write. Downstream plotting reads
//! only these files, so a run directory can be checked before it is handed on.

use std::fs;
use std::path::Path;

use serde::Serialize;

use super::boundary::CURRENT_HEADER;
use super::crossover::LADDER_HEADER;
use super::einstein::PSI_HEADER;
use super::soc::{QUASI_HEADER, SOC_HEADER};
use super::stationary::{BOXVAR_HEADER, CORR_HEADER, EXACT_HEADER, OBSERVABLES_HEADER};
use super::sweep::SWEEP_HEADER;
use crate::error::{ClgError, Result};

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CsvSchema {
    pub file: &'static str,
    /// Fixed columns after any coordinate columns.
    pub columns: &'static [&'static str],
    /// Leading `i1, …, id` columns, one per lattice axis.
    pub coordinates: bool,
    /// Columns holding `true`/`false` rather than numbers.
    pub flags: &'static [&'static str],
}

pub const SCHEMAS: &[CsvSchema] = &[
    CsvSchema { file: "observables.csv", columns: OBSERVABLES_HEADER, coordinates: false, flags: &["absorbed"] },
    CsvSchema { file: "corr.csv", columns: CORR_HEADER, coordinates: false, flags: &[] },
    CsvSchema { file: "boxvar.csv", columns: BOXVAR_HEADER, coordinates: false, flags: &[] },
    CsvSchema { file: "exact.csv", columns: EXACT_HEADER, coordinates: false, flags: &[] },
    CsvSchema { file: "psi.csv", columns: PSI_HEADER, coordinates: false, flags: &[] },
    CsvSchema {
        file: "profile.csv",
        columns: &["rhoA_measured", "stderr", "rhoA_dirichlet"],
        coordinates: true,
        flags: &[],
    },
    CsvSchema { file: "current.csv", columns: CURRENT_HEADER, coordinates: false, flags: &[] },
    CsvSchema { file: "sweep.csv", columns: SWEEP_HEADER, coordinates: false, flags: &[] },
    CsvSchema { file: "soc.csv", columns: SOC_HEADER, coordinates: false, flags: &["absorbed", "touched_edge"] },
    CsvSchema { file: "quasi.csv", columns: QUASI_HEADER, coordinates: false, flags: &[] },
    CsvSchema { file: "ladder.csv", columns: LADDER_HEADER, coordinates: false, flags: &[] },
];

/// One checked file.
#[derive(Debug, Clone, Serialize)]
pub struct Dataset {
    pub file: String,
    pub columns: Vec<String>,
    pub rows: usize,
}

fn schema_err(file: &str, msg: String) -> ClgError {
    ClgError::Contract(format!("{file}: {msg}"))
}

/// Checks one CSV against its schema: exact header, rectangular rows,
/// numeric cells (empty where an estimate is absent), boolean flags.
pub fn validate_csv(path: &Path, schema: &CsvSchema) -> Result<Dataset> {
    let file = schema.file;
    let mut r = csv::Reader::from_path(path).map_err(|e| schema_err(file, e.to_string()))?;
    let header: Vec<String> = r.headers().map_err(|e| schema_err(file, e.to_string()))?.iter().map(String::from).collect();
    if header.is_empty() || header.iter().all(|h| h.is_empty()) {
        return Err(schema_err(file, "empty file, no header row".into()));
    }
    let coords = header.len().saturating_sub(schema.columns.len());
    let mut expected: Vec<String> = if schema.coordinates { (1..=coords).map(|a| format!("i{a}")).collect() } else { Vec::new() };
    expected.extend(schema.columns.iter().map(|c| c.to_string()));
    if let Some(missing) = expected.iter().find(|c| !header.contains(c)) {
        return Err(schema_err(file, format!("missing column `{missing}`")));
    }
    if header != expected || (schema.coordinates && coords == 0) {
        return Err(schema_err(file, format!("header {header:?}, expected {expected:?}")));
    }
    let mut rows = 0;
    for (k, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| schema_err(file, e.to_string()))?;
        for (col, cell) in header.iter().zip(rec.iter()) {
            let ok = if schema.flags.contains(&col.as_str()) {
                cell == "true" || cell == "false"
            } else {
                cell.is_empty() || cell.parse::<f64>().is_ok()
            };
            if !ok {
                return Err(schema_err(file, format!("row {}: column `{col}` has {cell:?}", k + 2)));
            }
        }
        rows += 1;
    }
    Ok(Dataset { file: file.into(), columns: header, rows })
}

/// Validates every known CSV present in `dir`. Fails if there is none.
pub fn validate_dir(dir: &Path) -> Result<Vec<Dataset>> {
    if !dir.is_dir() {
        return Err(ClgError::usage(format!("{} is not a directory", dir.display())));
    }
    let mut out = Vec::new();
    for s in SCHEMAS {
        let path = dir.join(s.file);
        if path.exists() {
            out.push(validate_csv(&path, s)?);
        }
    }
    let unknown: Vec<String> = fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".csv") && !SCHEMAS.iter().any(|s| s.file == n))
        .collect();
    if !unknown.is_empty() {
        return Err(ClgError::Contract(format!("CSV files without a schema: {}", unknown.join(", "))));
    }
    if out.is_empty() {
        return Err(ClgError::insufficient(format!("no known CSV outputs in {}", dir.display())));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orchestrator::output::write_csv;

    #[test]
    fn schema_errors_name_the_problem() {
        let dir = tempfile::tempdir().unwrap();
        let s = SCHEMAS.iter().find(|s| s.file == "corr.csv").unwrap();
        let path = dir.path().join("corr.csv");
        write_csv(&path, CORR_HEADER, [vec!["0".into(), "0.1875".into(), "0".into()]]).unwrap();
        assert_eq!(validate_csv(&path, s).unwrap().rows, 1);
        write_csv(&path, &["lag", "stderr"], Vec::<Vec<String>>::new()).unwrap();
        let e = validate_csv(&path, s).unwrap_err().to_string();
        assert!(e.contains("missing column `phi`"), "{e}");
        fs::write(&path, "").unwrap();
        assert!(validate_csv(&path, s).is_err());
        fs::write(&path, "lag,phi,stderr\n1,abc,0\n").unwrap();
        let e = validate_csv(&path, s).unwrap_err().to_string();
        assert!(e.contains("row 2") && e.contains("phi"), "{e}");
    }

    #[test]
    fn profile_accepts_any_dimension() {
        let dir = tempfile::tempdir().unwrap();
        let s = SCHEMAS.iter().find(|s| s.file == "profile.csv").unwrap();
        let path = dir.path().join("profile.csv");
        fs::write(&path, "i1,i2,rhoA_measured,stderr,rhoA_dirichlet\n1,1,0.5,0.01,0.5\n").unwrap();
        assert_eq!(validate_csv(&path, s).unwrap().columns.len(), 5);
        fs::write(&path, "rhoA_measured,stderr,rhoA_dirichlet\n0.5,0.01,0.5\n").unwrap();
        assert!(validate_csv(&path, s).is_err());
    }
}
