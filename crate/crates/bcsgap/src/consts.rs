//! Physical and mathematical constants shared across the crate.
//!
//! Everything is expressed in natural units: hbar = 1, 2m = 1 (so the
//! kinetic term is p^2) and k_B = 1 (temperatures carry energy units).

use std::f64::consts::PI;

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Best constant in the Sobolev inequality on R^3: (3/4) 2^(2/3) pi^(4/3) ~ 5.4779.
pub fn sobolev_s3() -> f64 {
    0.75 * 2f64.powf(2.0 / 3.0) * PI.powf(4.0 / 3.0)
}

/// Coefficient of the low-density energy-gap prediction: 8 e^{-2}.
pub fn gap_coefficient() -> f64 {
    8.0 * (-2.0f64).exp()
}

/// Coefficient of the low-density critical-temperature prediction: (8/pi) e^{gamma - 2}.
pub fn tc_coefficient() -> f64 {
    (8.0 / PI) * (EULER_GAMMA - 2.0).exp()
}

/// Universal low-density limit of gap / critical temperature: pi e^{-gamma} ~ 1.7639.
pub fn gap_tc_ratio_limit() -> f64 {
    PI * (-EULER_GAMMA).exp()
}

/// Limit of log(mu/gap) + pi/(2 sqrt(mu) a): 2 - log 8 ~ -0.0794415.
pub fn d_limit() -> f64 {
    2.0 - 8f64.ln()
}

/// Representability floor on sqrt(mu)·|a|.
///
/// The predicted gap carries a factor exp(pi/(2 sqrt(mu) a)); requiring that
/// factor to stay above 1e-12 in double precision gives
/// sqrt(mu)·|a| >= pi/(2 ln 1e12) ~ 0.0569.
pub fn sqrt_mu_a_floor() -> f64 {
    PI / (2.0 * 1e12f64.ln())
}
