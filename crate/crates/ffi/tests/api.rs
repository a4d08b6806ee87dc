use std::ffi::{CStr, CString};
use std::ptr;

use clg_ffi::*;

fn last_error() -> String {
    let p = clg_last_error_message();
    assert!(!p.is_null(), "expected an error message");
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn simulation_round_trip() {
    let mut sim = ptr::null_mut();
    assert_eq!(clg_simulation_new_uniform(1, 64, 48, 7, 0, &mut sim), ClgStatus::Ok);
    assert!(!sim.is_null());
    unsafe {
        let mut stop = ClgStop::Time;
        assert_eq!(clg_simulation_run_events(sim, 1000, &mut stop), ClgStatus::Ok);
        assert_eq!(stop, ClgStop::Events);
        let (mut t, mut e) = (0.0, 0u64);
        assert_eq!(clg_simulation_clock(sim, &mut t, &mut e), ClgStatus::Ok);
        assert_eq!(e, 1000);
        assert!(t > 0.0);
        assert_eq!(clg_simulation_run_until(sim, t + 5.0, ptr::null_mut()), ClgStatus::Ok);

        let mut obs = ClgObservables::default();
        assert_eq!(clg_simulation_observables(sim, &mut obs), ClgStatus::Ok);
        assert_eq!(obs.rho, 0.75);
        assert!(obs.rho_a > 0.0 && obs.activity > 0.0);

        let mut occ = vec![0u8; 64];
        assert_eq!(clg_simulation_occupancy(sim, occ.as_mut_ptr(), occ.len()), ClgStatus::Ok);
        assert_eq!(occ.iter().map(|&x| x as usize).sum::<usize>(), 48);
        assert_eq!(clg_simulation_occupancy(sim, occ.as_mut_ptr(), 10), ClgStatus::Usage);
        assert!(last_error().contains("64 sites"));
        clg_simulation_free(sim);
    }
}

#[test]
fn same_seed_same_trajectory() {
    let occupancy = |replica| {
        let mut sim = ptr::null_mut();
        assert_eq!(clg_simulation_new_uniform(2, 8, 40, 3, replica, &mut sim), ClgStatus::Ok);
        let mut occ = vec![0u8; 64];
        unsafe {
            clg_simulation_run_events(sim, 500, ptr::null_mut());
            clg_simulation_occupancy(sim, occ.as_mut_ptr(), 64);
            clg_simulation_free(sim);
        }
        occ
    };
    assert_eq!(occupancy(0), occupancy(0));
    assert_ne!(occupancy(0), occupancy(1));
}

#[test]
fn chessboard_is_absorbed() {
    let occ: Vec<u8> = (0..16).map(|i| ((i / 4 + i % 4) % 2) as u8).collect();
    let mut sim = ptr::null_mut();
    unsafe {
        assert_eq!(clg_simulation_new_from_occupancy(2, 4, occ.as_ptr(), occ.len(), 1, 0, &mut sim), ClgStatus::Ok);
        let mut stop = ClgStop::Time;
        assert_eq!(clg_simulation_run_events(sim, 10, &mut stop), ClgStatus::Ok);
        assert_eq!(stop, ClgStop::Absorbed);
        let mut obs = ClgObservables::default();
        clg_simulation_observables(sim, &mut obs);
        assert!(obs.absorbed);
        assert_eq!(obs.activity, 0.0);
        clg_simulation_free(sim);
    }
}

#[test]
fn errors_are_reported_not_thrown() {
    let mut sim = ptr::null_mut();
    assert_eq!(clg_simulation_new_uniform(1, 8, 9, 0, 0, &mut sim), ClgStatus::Usage);
    assert!(sim.is_null());
    assert!(!last_error().is_empty());
    assert_eq!(clg_simulation_new_uniform(1, 8, 4, 0, 0, ptr::null_mut()), ClgStatus::Usage);
    unsafe {
        assert_eq!(clg_simulation_run_events(ptr::null_mut(), 1, ptr::null_mut()), ClgStatus::Usage);
        assert!(last_error().contains("sim"));
        let mut e = ClgExact1d::default();
        assert_eq!(clg_exact_1d(0.3, &mut e), ClgStatus::Domain);
        clg_simulation_free(ptr::null_mut());
        clg_experiment_free(ptr::null_mut());
    }
    // A successful call clears the message.
    let mut sim = ptr::null_mut();
    assert_eq!(clg_simulation_new_uniform(1, 8, 4, 0, 0, &mut sim), ClgStatus::Ok);
    assert!(clg_last_error_message().is_null());
    unsafe { clg_simulation_free(sim) };
}

#[test]
fn exact_values() {
    let mut e = ClgExact1d::default();
    assert_eq!(unsafe { clg_exact_1d(0.75, &mut e) }, ClgStatus::Ok);
    assert!((e.rho_a - 2.0 / 3.0).abs() < 1e-15);
    assert!((e.activity - 1.0 / 3.0).abs() < 1e-15);
    assert!((e.conductivity - 1.0 / 6.0).abs() < 1e-15);
    assert!((e.conductivity - e.diffusion * e.compressibility).abs() < 1e-15);
}

#[test]
fn cylinder_profile_is_linear() {
    let side = 6;
    let mut v = vec![0.0; side * side];
    let st = unsafe { clg_dirichlet_left_right(2, side, ClgMode::Cylinder, 0.8, 0.4, true, v.as_mut_ptr(), v.len()) };
    assert_eq!(st, ClgStatus::Ok);
    for (idx, x) in v.iter().enumerate() {
        let i1 = (idx / side + 1) as f64;
        let want = 0.8 + (0.4 - 0.8) * i1 / (side as f64 + 1.0);
        assert!((x - want).abs() < 1e-9, "site {idx}: {x} vs {want}");
    }
}

#[test]
fn driven_needs_open_lattice() {
    let mut sim = ptr::null_mut();
    assert_eq!(clg_simulation_new_driven(2, 8, ClgMode::Periodic, 0.8, 0.4, 0.6, 0, 0, &mut sim), ClgStatus::Usage);
    assert_eq!(clg_simulation_new_driven(2, 8, ClgMode::Cylinder, 0.8, 0.4, 0.6, 0, 0, &mut sim), ClgStatus::Ok);
    unsafe {
        assert_eq!(clg_simulation_run_events(sim, 2000, ptr::null_mut()), ClgStatus::Ok);
        clg_simulation_free(sim);
    }
}

#[test]
fn experiment_from_toml() {
    let dir = tempfile::tempdir().unwrap();
    let toml = CString::new(
        r#"
recipe = "exact1d-check"
seed = 11
replicas = 2
threads = 1

[geometry]
dim = 1
side = 128
mode = "periodic"

[initial]
kind = "canonical-1d"
n = 96

[run]
snapshots = 20
interval = 1.0

[analysis]
max_lag = 4
box_sizes = [2, 4, 8]
"#,
    )
    .unwrap();
    let out = CString::new(dir.path().to_str().unwrap()).unwrap();
    let mut exp = ptr::null_mut();
    unsafe {
        let st = clg_experiment_run(toml.as_ptr(), out.as_ptr(), &mut exp);
        assert_eq!(st, ClgStatus::Ok, "{:?}", clg_last_error_message().as_ref().map(|_| last_error()));
        let manifest = CStr::from_ptr(clg_experiment_manifest_json(exp)).to_str().unwrap();
        let v: serde_json::Value = serde_json::from_str(manifest).unwrap();
        assert_eq!(v["recipe"], "exact1d-check");
        assert_eq!(v["seed"], 11);
        clg_experiment_free(exp);
    }
    assert!(dir.path().join("manifest.json").exists());

    let bad = CString::new("recipe = \"sweep\"\n").unwrap();
    let st = unsafe { clg_experiment_run(bad.as_ptr(), ptr::null(), &mut exp) };
    assert_eq!(st, ClgStatus::Config);
    assert!(last_error().contains("seed") || last_error().contains("geometry"), "{}", last_error());
}
