//! Zero-temperature BCS gap equation for attractive radial wells: gap
//! solutions and the energy gap, scattering lengths via the zero-energy
//! Birman–Schwinger resolvent, critical temperatures from the linearized
//! pairing criterion, and the low-density diagnostics connecting them.
//!
//! Units throughout: hbar = 1, 2m = 1 (kinetic term p^2), k_B = 1.

pub mod asymptotics;
pub mod consts;
pub mod error;
pub mod gap;
pub mod interp;
pub mod potentials;
pub mod quadrature;
pub mod scattering;
pub mod tc;

pub use asymptotics::{asymptotics_report, m_mu_direct, m_mu_split, AsymptoticsReport};
pub use error::{BcsError, Result};
pub use gap::{bcs_functional, solve_gap, GapOpts, GapSolution};
pub use potentials::{check_admissible, AdmissibilityReport, Family, Potential};
pub use quadrature::{build_grid, kernel_matrix, RadialGrid};
pub use scattering::{scattering_length, scattering_length_ode, scattering_report, ScatteringResult};
pub use tc::{critical_temperature, TcOpts, TcResult};
