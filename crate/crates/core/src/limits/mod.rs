//! Numerical checks of the limit chain, each returning a [`LimitReport`].

mod anchors;
mod marginal;
mod operators;
mod particles;
mod report;
mod solver;

use serde::{Deserialize, Serialize};

pub use anchors::{check_beta_concentration, check_beta_identities, check_rank_law, check_scalings};
pub use marginal::{check_expansion, check_marginal_limit_knearest, check_marginal_limit_nearest, h_at_zero, sine_test_field};
pub use operators::{check_mass_identity, check_singular_limit};
pub use particles::{check_event_counts, check_sampling_noise, compare_sim_to_pde, SimPdeSetup};
pub use report::{fit_order, parse_sweep_csv, Asymptote, Check, Excluded, LimitReport, OrderFit};
pub use solver::{check_manufactured_solution, MmsSetup};

/// Pass/fail thresholds for every check. Configurations may override any field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub scaling_rel: f64,
    pub beta_identity_rel: f64,
    pub beta_asymptotic_rel: f64,
    /// Largest allowed `E_β[h]` at the end of a concentration sweep.
    pub beta_concentration_final: f64,
    pub quadrature_identity: f64,
    pub rank_law_tv: f64,
    pub mass_identity_abs: f64,
    pub factorized_abs: f64,
    pub expansion_rel: f64,
    pub marginal_rel: f64,
    pub agreement_rel: f64,
    pub singular_order_min: f64,
    pub mms_order_min: f64,
    pub mms_order_max: f64,
    pub sampling_slope: f64,
    pub sampling_slope_tol: f64,
    pub poisson_p_min: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            scaling_rel: 1e-10,
            beta_identity_rel: 1e-10,
            beta_asymptotic_rel: 1e-2,
            beta_concentration_final: 1e-2,
            quadrature_identity: 1e-8,
            rank_law_tv: 0.01,
            mass_identity_abs: 1e-12,
            factorized_abs: 1e-13,
            expansion_rel: 0.05,
            marginal_rel: 0.05,
            agreement_rel: 0.05,
            singular_order_min: 0.0,
            mms_order_min: 1.7,
            mms_order_max: 2.3,
            sampling_slope: -0.5,
            sampling_slope_tol: 0.1,
            poisson_p_min: 0.01,
        }
    }
}

fn rel_err(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        a.abs()
    } else {
        ((a - b) / b).abs()
    }
}
