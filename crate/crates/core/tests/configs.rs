use std::path::PathBuf;

use clg::orchestrator::ExperimentConfig;

fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

#[test]
fn shipped_configs_parse_and_round_trip() {
    let mut seen = 0;
    for entry in std::fs::read_dir(configs_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("toml") {
            continue;
        }
        let cfg = ExperimentConfig::load(&path, &[]).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let again = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, again, "{}", path.display());
        seen += 1;
    }
    assert!(seen >= 6, "only {seen} configs found");
}

#[test]
fn quick_sweep_runs_through_the_cli() {
    let out = tempfile::tempdir().unwrap();
    let status = std::process::Command::new(env!("CARGO_BIN_EXE_clg"))
        .arg("sweep")
        .arg(configs_dir().join("sweep-quick.toml"))
        .arg("-o")
        .arg(out.path())
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    for f in ["sweep.csv", "exponents.json", "manifest.json", "config.toml"] {
        assert!(out.path().join(f).exists(), "missing {f}");
    }
}
