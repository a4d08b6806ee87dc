//! Compiles and runs a small C program against the generated header and the
//! static library. Skipped when no C compiler is on the path.

use std::path::{Path, PathBuf};
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "clg.h"

int main(void) {
    ClgSimulation *sim = NULL;
    if (clg_simulation_new_uniform(1, 32, 24, 5, 0, &sim) != CLG_STATUS_OK) return 1;
    enum ClgStop stop;
    if (clg_simulation_run_events(sim, 200, &stop) != CLG_STATUS_OK || stop != CLG_STOP_EVENTS) return 2;
    ClgObservables obs;
    if (clg_simulation_observables(sim, &obs) != CLG_STATUS_OK || obs.rho != 0.75) return 3;
    clg_simulation_free(sim);

    ClgExact1d e;
    if (clg_exact_1d(0.2, &e) != CLG_STATUS_DOMAIN) return 4;
    if (clg_last_error_message() == NULL) return 5;
    printf("%s\n", clg_version());
    return 0;
}
"#;

fn compiler() -> Option<String> {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    Command::new(&cc).arg("--version").output().ok().filter(|o| o.status.success()).map(|_| cc)
}

/// `target/<profile>` for the running test binary.
fn profile_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(Path::parent).unwrap().to_path_buf()
}

#[test]
fn header_compiles_and_links() {
    let Some(cc) = compiler() else {
        eprintln!("no C compiler found, skipping");
        return;
    };
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let lib = profile_dir().join("libclg_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("main.c");
    std::fs::write(&src, PROGRAM).unwrap();
    let exe = tmp.path().join("main");
    let out = Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Werror", "-I"])
        .arg(&include)
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .output()
        .unwrap();
    assert!(out.status.success(), "cc failed:\n{}", String::from_utf8_lossy(&out.stderr));
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "C program exited with {:?}", run.status.code());
    assert_eq!(String::from_utf8_lossy(&run.stdout).trim(), env!("CARGO_PKG_VERSION"));
}
