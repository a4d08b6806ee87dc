//! C ABI for the constrained lattice gas toolkit.
//!
//! Every function returns a [`ClgStatus`]. On failure a thread-local message
//! is available from [`clg_last_error_message`] until the next call on the
//! same thread. Objects are opaque handles created by `*_new` functions and
//! released by the matching `*_free`; passing a null handle to `*_free` is a
//! no-op. Panics never cross the boundary: they are reported as
//! `CLG_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::sync::Arc;

use clg::boundary::{dirichlet_solve, Coupling};
use clg::dynamics::{derive_rng, initial_condition, BoundarySpec, InitialKind, SimulationState, StopCondition, StopReason, StreamPurpose};
use clg::exact1d::exact_observables;
use clg::lattice::{BoundaryMode, Configuration, Geometry};
use clg::observables::ObservableRecord;
use clg::orchestrator::{run, ExperimentConfig};
use clg::ClgError;

/// Result of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClgStatus {
    Ok = 0,
    NullPointer = 1,
    Usage = 2,
    Contract = 3,
    Domain = 4,
    NoConvergence = 5,
    Insufficient = 6,
    Config = 7,
    Io = 8,
    Panic = 9,
}

/// Lattice boundary mode.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClgMode {
    Periodic = 0,
    Open = 1,
    Cylinder = 2,
}

/// Why a run stopped.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClgStop {
    Time = 0,
    Events = 1,
    Absorbed = 2,
}

/// Scalar observables of the current configuration.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct ClgObservables {
    pub rho: f64,
    pub rho_a: f64,
    pub activity: f64,
    pub sigma_hat: f64,
    pub absorbed: bool,
}

/// One-dimensional closed forms at density `rho`.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct ClgExact1d {
    pub rho: f64,
    pub rho_a: f64,
    pub activity: f64,
    pub diffusion: f64,
    pub compressibility: f64,
    pub conductivity: f64,
    pub xi_cross: f64,
    pub xi_perp: f64,
}

/// Opaque simulation handle.
pub struct ClgSimulation {
    state: SimulationState,
}

/// Opaque handle to a finished experiment.
pub struct ClgExperiment {
    manifest: CString,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &ClgError) -> ClgStatus {
    match e {
        ClgError::Usage(_) => ClgStatus::Usage,
        ClgError::Contract(_) | ClgError::Checkpoint(_) => ClgStatus::Contract,
        ClgError::Domain(_) => ClgStatus::Domain,
        ClgError::NoConvergence { .. } => ClgStatus::NoConvergence,
        ClgError::Insufficient(_) => ClgStatus::Insufficient,
        ClgError::Config(_) => ClgStatus::Config,
        ClgError::Io(_) | ClgError::Json(_) => ClgStatus::Io,
    }
}

/// Runs `f`, turning errors and panics into a status plus message.
fn guard(f: impl FnOnce() -> Result<(), ClgError>) -> ClgStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ClgStatus::Ok,
        Ok(Err(e)) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            ClgStatus::Panic
        }
    }
}

fn null(name: &str) -> ClgError {
    ClgError::usage(format!("`{name}` is null"))
}

fn mode(m: ClgMode) -> BoundaryMode {
    match m {
        ClgMode::Periodic => BoundaryMode::Periodic,
        ClgMode::Open => BoundaryMode::Open,
        ClgMode::Cylinder => BoundaryMode::Cylinder,
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, ClgError> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p).to_str().map_err(|_| ClgError::usage(format!("`{name}` is not UTF-8")))
}

unsafe fn sim_ref<'a>(sim: *const ClgSimulation) -> Result<&'a ClgSimulation, ClgError> {
    sim.as_ref().ok_or_else(|| null("sim"))
}

unsafe fn sim_mut<'a>(sim: *mut ClgSimulation) -> Result<&'a mut ClgSimulation, ClgError> {
    sim.as_mut().ok_or_else(|| null("sim"))
}

fn stop_code(r: StopReason) -> ClgStop {
    match r {
        StopReason::Time => ClgStop::Time,
        StopReason::Events => ClgStop::Events,
        StopReason::Absorbed => ClgStop::Absorbed,
    }
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn clg_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn clg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

fn new_sim(
    dim: usize,
    side: usize,
    m: ClgMode,
    seed: u64,
    replica: u64,
    left_right: Option<(f64, f64)>,
    make: impl FnOnce(Arc<Geometry>, &mut clg::dynamics::SimRng) -> Result<Configuration, ClgError>,
    out: *mut *mut ClgSimulation,
) -> ClgStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let g = Arc::new(Geometry::new(dim, side, mode(m))?);
        let mut init_rng = derive_rng(seed, replica, StreamPurpose::Initial);
        let config = make(g.clone(), &mut init_rng)?;
        let rng = derive_rng(seed, replica, StreamPurpose::Dynamics);
        let state = match (g.mode().is_periodic(), left_right) {
            (true, None) => SimulationState::new(config, rng)?,
            (false, Some((l, r))) => {
                let spec = BoundarySpec::left_right(&g, l, r)?;
                SimulationState::with_reservoirs(config, spec, rng)?
            }
            (true, Some(_)) => return Err(ClgError::usage("reservoirs need an open or cylinder lattice")),
            (false, None) => return Err(ClgError::usage("open and cylinder lattices need reservoir densities")),
        };
        unsafe { *out = Box::into_raw(Box::new(ClgSimulation { state })) };
        Ok(())
    })
}

/// Periodic simulation from `n` uniformly placed particles.
#[no_mangle]
pub extern "C" fn clg_simulation_new_uniform(
    dim: usize,
    side: usize,
    n: usize,
    seed: u64,
    replica: u64,
    out: *mut *mut ClgSimulation,
) -> ClgStatus {
    new_sim(dim, side, ClgMode::Periodic, seed, replica, None, |g, r| Ok(initial_condition(&InitialKind::UniformN { n }, g, r)?), out)
}

/// Periodic simulation from a 0/1 occupancy array of length `side^dim`,
/// sites ordered with the first coordinate slowest.
///
/// # Safety
/// `occupancy` must point to `len` readable bytes.
#[no_mangle]
pub unsafe extern "C" fn clg_simulation_new_from_occupancy(
    dim: usize,
    side: usize,
    occupancy: *const u8,
    len: usize,
    seed: u64,
    replica: u64,
    out: *mut *mut ClgSimulation,
) -> ClgStatus {
    if occupancy.is_null() {
        return guard(|| Err(null("occupancy")));
    }
    let occ = std::slice::from_raw_parts(occupancy, len);
    new_sim(dim, side, ClgMode::Periodic, seed, replica, None, |g, _| Ok(Configuration::from_occupancy(g, occ)?), out)
}

/// Boundary-driven simulation: reservoir density `left` on the face
/// `i_1 = 1` and `right` on `i_1 = L`, Bernoulli(`rho0`) initial state.
#[no_mangle]
pub extern "C" fn clg_simulation_new_driven(
    dim: usize,
    side: usize,
    mode: ClgMode,
    left: f64,
    right: f64,
    rho0: f64,
    seed: u64,
    replica: u64,
    out: *mut *mut ClgSimulation,
) -> ClgStatus {
    new_sim(
        dim,
        side,
        mode,
        seed,
        replica,
        Some((left, right)),
        |g, r| Ok(initial_condition(&InitialKind::Bernoulli { rho: rho0 }, g, r)?),
        out,
    )
}

/// # Safety
/// `sim` must be null or a handle from a `clg_simulation_new_*` call that
/// has not been freed.
#[no_mangle]
pub unsafe extern "C" fn clg_simulation_free(sim: *mut ClgSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Advances by `events` events or until absorption.
///
/// # Safety
/// `sim` must be a live handle; `stop` may be null.
#[no_mangle]
pub unsafe extern "C" fn clg_simulation_run_events(sim: *mut ClgSimulation, events: u64, stop: *mut ClgStop) -> ClgStatus {
    guard(|| {
        let s = sim_mut(sim)?;
        let target = s.state.event_count() + events;
        let r = s.state.run_until(StopCondition::after_events(target));
        if let Some(out) = stop.as_mut() {
            *out = stop_code(r);
        }
        Ok(())
    })
}

/// Advances to absolute time `t` or until absorption.
///
/// # Safety
/// `sim` must be a live handle; `stop` may be null.
#[no_mangle]
pub unsafe extern "C" fn clg_simulation_run_until(sim: *mut ClgSimulation, t: f64, stop: *mut ClgStop) -> ClgStatus {
    guard(|| {
        let s = sim_mut(sim)?;
        if !(t >= s.state.time()) {
            return Err(ClgError::usage(format!("target time {t} is before the current time {}", s.state.time())));
        }
        let r = s.state.run_until(StopCondition::at_time(t));
        if let Some(out) = stop.as_mut() {
            *out = stop_code(r);
        }
        Ok(())
    })
}

/// Current time and event count; either output may be null.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn clg_simulation_clock(sim: *const ClgSimulation, time: *mut f64, events: *mut u64) -> ClgStatus {
    guard(|| {
        let s = sim_ref(sim)?;
        if let Some(t) = time.as_mut() {
            *t = s.state.time();
        }
        if let Some(e) = events.as_mut() {
            *e = s.state.event_count();
        }
        Ok(())
    })
}

/// # Safety
/// `sim` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn clg_simulation_observables(sim: *const ClgSimulation, out: *mut ClgObservables) -> ClgStatus {
    guard(|| {
        let s = sim_ref(sim)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let r = ObservableRecord::from_state(&s.state);
        *out = ClgObservables { rho: r.rho, rho_a: r.rho_a, activity: r.activity, sigma_hat: r.sigma_hat, absorbed: r.absorbed };
        Ok(())
    })
}

/// Copies the occupancy into `buf`, which must hold `side^dim` bytes.
///
/// # Safety
/// `sim` must be a live handle and `buf` must point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn clg_simulation_occupancy(sim: *const ClgSimulation, buf: *mut u8, len: usize) -> ClgStatus {
    guard(|| {
        let s = sim_ref(sim)?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let occ = s.state.config().occupancy();
        if len != occ.len() {
            return Err(ClgError::usage(format!("buffer holds {len} bytes, lattice has {} sites", occ.len())));
        }
        ptr::copy_nonoverlapping(occ.as_ptr(), buf, len);
        Ok(())
    })
}

/// Closed-form one-dimensional observables at density `rho`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn clg_exact_1d(rho: f64, out: *mut ClgExact1d) -> ClgStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let e = exact_observables(rho)?;
        *out = ClgExact1d {
            rho: e.rho,
            rho_a: e.rho_a,
            activity: e.activity,
            diffusion: e.diffusion,
            compressibility: e.compressibility,
            conductivity: e.conductivity,
            xi_cross: e.xi_cross,
            xi_perp: e.xi_perp,
        };
        Ok(())
    })
}

/// Solves the discrete Dirichlet problem with left/right reservoir data.
/// `per_site` selects one reservoir coupling per boundary site instead of
/// one per mirror neighbour. Writes `side^dim` values to `out`.
///
/// # Safety
/// `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn clg_dirichlet_left_right(
    dim: usize,
    side: usize,
    mode: ClgMode,
    left: f64,
    right: f64,
    per_site: bool,
    out: *mut f64,
    len: usize,
) -> ClgStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let g = Geometry::new(dim, side, self::mode(mode))?;
        if len != g.volume() {
            return Err(ClgError::usage(format!("buffer holds {len} values, lattice has {} sites", g.volume())));
        }
        let spec = BoundarySpec::left_right(&g, left, right)?;
        let coupling = if per_site { Coupling::PerSite } else { Coupling::PerMirrorNeighbour };
        let sol = dirichlet_solve(&g, &spec, coupling, 1e-12, 100_000)?;
        ptr::copy_nonoverlapping(sol.values.as_ptr(), out, len);
        Ok(())
    })
}

/// Runs an experiment from TOML config text. With a non-null `out_dir` the
/// outputs are written there.
///
/// # Safety
/// `config_toml` must be a nul-terminated string; `out_dir` null or one.
#[no_mangle]
pub unsafe extern "C" fn clg_experiment_run(
    config_toml: *const c_char,
    out_dir: *const c_char,
    out: *mut *mut ClgExperiment,
) -> ClgStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let text = str_arg(config_toml, "config_toml")?;
        let dir = if out_dir.is_null() { None } else { Some(str_arg(out_dir, "out_dir")?) };
        let cfg = ExperimentConfig::from_toml(text)?;
        let result = run(&cfg, dir.map(Path::new), false)?;
        let manifest = serde_json::to_string(&result.manifest)?;
        let manifest = CString::new(manifest).map_err(|e| ClgError::Contract(e.to_string()))?;
        *out = Box::into_raw(Box::new(ClgExperiment { manifest }));
        Ok(())
    })
}

/// Manifest of a finished experiment as JSON, owned by the handle.
///
/// # Safety
/// `exp` must be a live handle or null (which yields null).
#[no_mangle]
pub unsafe extern "C" fn clg_experiment_manifest_json(exp: *const ClgExperiment) -> *const c_char {
    exp.as_ref().map_or(ptr::null(), |e| e.manifest.as_ptr())
}

/// # Safety
/// `exp` must be null or a live handle from [`clg_experiment_run`].
#[no_mangle]
pub unsafe extern "C" fn clg_experiment_free(exp: *mut ClgExperiment) {
    if !exp.is_null() {
        drop(Box::from_raw(exp));
    }
}
