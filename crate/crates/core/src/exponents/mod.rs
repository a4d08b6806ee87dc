//! Exponent estimation and the scaling-relation checker.

mod derivative;
mod fit;
mod lengths;
mod relations;

pub use derivative::numerical_d;
pub use fit::{log_log_fit, log_log_fit_weighted, PowerLawFit, MIN_FIT_POINTS};
pub use lengths::{
    crossover_size, hidden_density_xi_perp, significant_lag_window, xi_cross_fit, CrossoverEstimate,
    LadderPoint, XiCrossFit,
};
pub use relations::{relation_check, propagate, RelationReport, Residual};

use serde::{Deserialize, Serialize};

use crate::stats::Estimate;

/// Exponent estimates with uncertainties. Absent entries are `None`; `z` and
/// `θ` are normally derived by [`relation_check`] rather than fitted.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ExponentSet {
    pub rho_c: Option<Estimate>,
    pub beta: Option<Estimate>,
    pub b: Option<Estimate>,
    pub alpha: Option<Estimate>,
    pub gamma: Option<Estimate>,
    pub nu_cross: Option<Estimate>,
    pub nu_perp: Option<Estimate>,
    pub zeta: Option<Estimate>,
    pub z: Option<Estimate>,
    pub theta: Option<Estimate>,
}
