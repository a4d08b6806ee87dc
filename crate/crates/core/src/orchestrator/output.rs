use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{ClgError, Result};
use crate::stats::Estimate;

/// Formats a float with the shortest representation that round-trips.
pub fn num(x: f64) -> String {
    format!("{x}")
}

/// `(value, stderr)` cells; missing estimates become empty cells.
pub fn est_cells(e: Option<Estimate>) -> [String; 2] {
    match e {
        Some(e) => [num(e.value), num(e.stderr)],
        None => [String::new(), String::new()],
    }
}

/// Writes a CSV with a fixed header row.
pub fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        if row.len() != header.len() {
            return Err(ClgError::Contract(format!(
                "{}: row has {} cells, header has {}",
                path.display(),
                row.len(),
                header.len()
            )));
        }
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> ClgError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => ClgError::Io(io),
        other => ClgError::Contract(format!("csv: {other:?}")),
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Provenance record written next to every run's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub recipe: String,
    pub seed: u64,
    pub replicas: u64,
    pub threads: usize,
    /// Canonical config text; rerunning it reproduces every output.
    pub config: String,
    pub outputs: Vec<String>,
    pub resumed_tasks: usize,
    pub wall_time_seconds: f64,
}

/// Per-task results kept on disk so an interrupted run can resume. Tasks are
/// pure functions of the config and their seed, so a cached result is the
/// result the task would recompute.
#[derive(Debug, Clone)]
pub struct TaskCache {
    dir: Option<PathBuf>,
    resume: bool,
}

impl TaskCache {
    pub fn disabled() -> Self {
        TaskCache { dir: None, resume: false }
    }

    pub fn new(dir: PathBuf, resume: bool) -> Result<Self> {
        fs::create_dir_all(&dir)?;
        Ok(TaskCache { dir: Some(dir), resume })
    }

    /// Returns the cached result for `key` (and whether it was cached), or
    /// runs `task` and stores its result.
    pub fn get_or_run<T, F>(&self, key: &str, task: F) -> Result<(T, bool)>
    where
        T: Serialize + DeserializeOwned,
        F: FnOnce() -> Result<T>,
    {
        let Some(dir) = &self.dir else {
            return Ok((task()?, false));
        };
        let path = dir.join(format!("{key}.json"));
        if self.resume && path.exists() {
            let text = fs::read_to_string(&path)?;
            if let Ok(v) = serde_json::from_str(&text) {
                return Ok((v, true));
            }
        }
        let v = task()?;
        let tmp = dir.join(format!("{key}.json.tmp"));
        fs::write(&tmp, serde_json::to_string(&v)?)?;
        fs::rename(&tmp, &path)?;
        Ok((v, false))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_fixed_header_and_rejects_ragged_rows() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.csv");
        write_csv(&p, &["lag", "phi", "stderr"], vec![vec!["1".into(), num(-0.0625), num(0.001)]]).unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "lag,phi,stderr\n1,-0.0625,0.001\n");
        assert!(write_csv(&p, &["a", "b"], vec![vec!["1".into()]]).is_err());
    }

    #[test]
    fn cache_resumes_only_when_asked() {
        let dir = tempfile::tempdir().unwrap();
        let c = TaskCache::new(dir.path().join("tasks"), false).unwrap();
        let (v, hit) = c.get_or_run("a", || Ok(3u32)).unwrap();
        assert_eq!((v, hit), (3, false));
        let r = TaskCache::new(dir.path().join("tasks"), true).unwrap();
        let (v, hit) = r.get_or_run("a", || -> Result<u32> { panic!("should not rerun") }).unwrap();
        assert_eq!((v, hit), (3, true));
    }
}
