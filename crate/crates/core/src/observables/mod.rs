//! Estimators for the macroscopic observables.

mod boxvar;
mod correlation;
mod scalar;
mod soc;
mod spacetime;

pub use boxvar::{
    compressibility_from_box_variance, hyperuniformity_exponent, BoxChi, BoxPlacement, BoxVarianceEstimator,
    BoxVariancePoint, Hyperuniformity, VarianceCurve,
};
pub use correlation::{
    compressibility_from_correlations, CorrelationChi, CorrelationEstimator, CorrelationProfile, MIN_RELIABLE_SAMPLES,
};
pub use scalar::{
    activity_bound_holds, activity_of, measure_activity, measure_rho_a, sigma_from_crossings, sigma_from_jumps,
    summarize, ObservableRecord, ScalarSummary,
};
pub use soc::{soc_spread_experiment, soc_spread_run, soc_window, SocResult, SocRun, MIN_WINDOW_SITES};
pub use spacetime::{plane_sums, psi_hat, EinsteinAccumulator, EinsteinResult};
