//! Command-line front end machinery: sweeps, machine-readable reports,
//! golden-file comparison, and the acceptance verifier. The binary in
//! `main.rs` is a thin argument layer over this library so the
//! integration and acceptance tests can drive the same code paths.

pub mod golden;
pub mod sweep;
pub mod verify;

pub use golden::{compare_golden, write_golden, GoldenFile};
pub use sweep::{parse_mu_list, parse_mu_range, run_sweep, rows_to_csv, rows_to_json, SweepOpts, SweepRow};
pub use verify::{run_verify, CriterionEntry, Profile, VerifyReport};
