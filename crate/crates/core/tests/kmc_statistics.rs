//! Statistical checks of the event-driven dynamics at a held configuration:
//! which event fires first and how long it takes.

use std::collections::HashMap;
use std::sync::Arc;

use statrs::distribution::{ChiSquared, ContinuousCDF, Exp};

use clg::dynamics::{derive_rng, initial_condition, BoundarySpec, Event, InitialKind, SimulationState, StepOutcome, StopCondition, StreamPurpose};
use clg::exact1d::active_density;
use clg::lattice::{allowed_jumps, BoundaryMode, Configuration, Geometry};
use clg::observables::measure_rho_a;
use clg::stats::{mean_stderr, Estimate};

fn held_configuration(mode: BoundaryMode) -> Configuration {
    let g = Arc::new(Geometry::new(2, 6, mode).unwrap());
    initial_condition(&InitialKind::Bernoulli { rho: 0.6 }, g, &mut derive_rng(1, 0, StreamPurpose::Initial)).unwrap()
}

fn fresh_state(config: &Configuration, draw: u64) -> SimulationState {
    let rng = derive_rng(99, draw, StreamPurpose::Dynamics);
    let g = config.geometry();
    if g.mode().is_periodic() {
        SimulationState::new(config.clone(), rng).unwrap()
    } else {
        let spec = BoundarySpec::left_right(g, 0.7, 0.2).unwrap();
        SimulationState::with_reservoirs(config.clone(), spec, rng).unwrap()
    }
}

/// Event label: a jump, or a resampling of a boundary site.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Label {
    Jump(usize, usize),
    Resample(usize),
}

fn chi_square_p(counts: &HashMap<Label, u64>, slots: &[Label], draws: u64) -> f64 {
    let expected = draws as f64 / slots.len() as f64;
    let stat: f64 = slots
        .iter()
        .map(|s| {
            let o = *counts.get(s).unwrap_or(&0) as f64;
            (o - expected).powi(2) / expected
        })
        .sum();
    1.0 - ChiSquared::new((slots.len() - 1) as f64).unwrap().cdf(stat)
}

fn first_events(config: &Configuration, draws: u64) -> (HashMap<Label, u64>, Vec<f64>) {
    let mut counts = HashMap::new();
    let mut waits = Vec::with_capacity(draws as usize);
    for draw in 0..draws {
        let mut s = fresh_state(config, draw);
        let label = match s.step() {
            StepOutcome::Event(Event::Jump { from, to }) => Label::Jump(from, to),
            StepOutcome::Event(Event::Resample { site, .. }) => Label::Resample(site),
            StepOutcome::Absorbed => panic!("held configuration is active"),
        };
        *counts.entry(label).or_insert(0) += 1;
        waits.push(s.time());
    }
    (counts, waits)
}

/// Asymptotic Kolmogorov p-value for the one-sample statistic `d` at size `n`.
fn ks_p_value(d: f64, n: usize) -> f64 {
    let x = (n as f64).sqrt() * d;
    let p: f64 = (1..=100).map(|k| (-1f64).powi(k - 1) * (-2.0 * (k * k) as f64 * x * x).exp()).sum();
    (2.0 * p).clamp(0.0, 1.0)
}

fn ks_exponential(waits: &mut [f64], rate: f64) -> f64 {
    waits.sort_by(f64::total_cmp);
    let exp = Exp::new(rate).unwrap();
    let n = waits.len() as f64;
    let d = waits
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let f = exp.cdf(t);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max);
    ks_p_value(d, waits.len())
}

#[test]
fn jump_chain_is_uniform_over_allowed_jumps() {
    let config = held_configuration(BoundaryMode::Periodic);
    let slots: Vec<Label> = allowed_jumps(&config).pairs(&config).into_iter().map(|(a, b)| Label::Jump(a, b)).collect();
    assert!(slots.len() > 10);
    let draws = 200 * slots.len() as u64;
    let (counts, _) = first_events(&config, draws);
    assert!(counts.keys().all(|k| slots.contains(k)), "an event outside the allowed set fired");
    let p = chi_square_p(&counts, &slots, draws);
    assert!(p > 0.01, "chi-square p = {p}");
}

#[test]
fn reservoir_events_share_the_clock_uniformly() {
    let config = held_configuration(BoundaryMode::Cylinder);
    let g = config.geometry();
    let mut slots: Vec<Label> = allowed_jumps(&config).pairs(&config).into_iter().map(|(a, b)| Label::Jump(a, b)).collect();
    slots.extend(g.boundary_sites().iter().map(|&s| Label::Resample(s)));
    let draws = 200 * slots.len() as u64;
    let (counts, _) = first_events(&config, draws);
    assert!(counts.keys().all(|k| slots.contains(k)));
    let p = chi_square_p(&counts, &slots, draws);
    assert!(p > 0.01, "chi-square p = {p}");
}

#[test]
fn waiting_times_are_exponential_with_the_total_rate() {
    for mode in [BoundaryMode::Periodic, BoundaryMode::Cylinder] {
        let config = held_configuration(mode);
        let rate = fresh_state(&config, 0).total_rate() as f64;
        let (_, mut waits) = first_events(&config, 5000);
        let p = ks_exponential(&mut waits, rate);
        assert!(p > 0.01, "{mode:?}: KS p = {p} at rate {rate}");
    }
}

#[test]
fn ks_test_rejects_the_wrong_rate() {
    let config = held_configuration(BoundaryMode::Periodic);
    let rate = fresh_state(&config, 0).total_rate() as f64;
    let (_, mut waits) = first_events(&config, 5000);
    assert!(ks_exponential(&mut waits, 1.2 * rate) < 1e-6);
}

#[test]
fn absorbed_states_never_move() {
    for kind in [InitialKind::Chessboard, InitialKind::Full] {
        let g = Arc::new(Geometry::periodic(2, 8).unwrap());
        let c = initial_condition(&kind, g, &mut derive_rng(0, 0, StreamPurpose::Initial)).unwrap();
        let mut s = SimulationState::new(c.clone(), derive_rng(0, 0, StreamPurpose::Dynamics)).unwrap();
        s.run_until(StopCondition::at_time(1e6));
        assert_eq!(s.event_count(), 0);
        assert_eq!(s.config().occupancy(), c.occupancy());
    }
}

/// Starting from the one-dimensional stationary sampler, the time-averaged
/// active density does not drift.
#[test]
fn one_dimensional_sampler_is_stationary() {
    let rho = 0.75;
    let g = Arc::new(Geometry::periodic(1, 2048).unwrap());
    let (mut early, mut late) = (Vec::new(), Vec::new());
    for r in 0..12 {
        let c = initial_condition(&InitialKind::GrandCanonical1d { rho }, g.clone(), &mut derive_rng(4, r, StreamPurpose::Initial)).unwrap();
        let mut s = SimulationState::new(c, derive_rng(4, r, StreamPurpose::Dynamics)).unwrap();
        let mut series = Vec::new();
        for k in 0..=100 {
            s.run_until(StopCondition::at_time(k as f64));
            series.push(measure_rho_a(s.config()));
        }
        early.push(series[..10].iter().sum::<f64>() / 10.0);
        late.push(series[91..].iter().sum::<f64>() / 10.0);
    }
    let (a, b) = (mean_stderr(&early), mean_stderr(&late));
    let z = (a.value - b.value) / (a.stderr.powi(2) + b.stderr.powi(2)).sqrt();
    assert!(z.abs() < 4.0, "drift: early {a}, late {b}");
    // The sampler is grand canonical, so compare against the density of each
    // start only loosely.
    let target = active_density(rho);
    let both = Estimate::new((a.value + b.value) / 2.0, a.stderr.max(b.stderr));
    assert!(both.z_score(target).abs() < 5.0, "{both} vs {target}");
}
