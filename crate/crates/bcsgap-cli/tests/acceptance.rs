//! Acceptance suite: every release criterion at its pinned tolerance,
//! one pass/fail line per criterion entry. The low-density sweep behind
//! criteria 5-8 is computed once and shared.

use bcsgap::potentials::{Family, Potential};
use bcsgap_cli::verify::{
    acceptance_sweep, criterion_d_limit, criterion_decays, criterion_gap_residual,
    criterion_m_routes, criterion_ratio, criterion_resolvent_link, criterion_scaling,
    criterion_scattering_oracle, CriterionEntry, SweepData,
};
use std::sync::OnceLock;

fn sweep_potential() -> Potential {
    Potential::new(Family::Gaussian, 1.0, 1.0).unwrap()
}

fn sweep() -> &'static SweepData {
    static SWEEP: OnceLock<SweepData> = OnceLock::new();
    SWEEP.get_or_init(|| acceptance_sweep(&sweep_potential()).expect("acceptance sweep"))
}

fn report(criterion: &str, entries: &[CriterionEntry]) {
    let mut all = true;
    for e in entries {
        println!(
            "[{}] {criterion} / {}: measured = {:.6e}, target = {:.6e}, tolerance = {:.3e}",
            if e.pass { "PASS" } else { "FAIL" },
            e.name,
            e.measured,
            e.target,
            e.tolerance
        );
        all &= e.pass;
    }
    assert!(all, "{criterion} failed: {entries:?}");
}

#[test]
fn criterion_1_scattering_oracle_equivalence() {
    let entries = criterion_scattering_oracle().unwrap();
    report("criterion 1", &entries);
}

#[test]
fn criterion_2_gap_equation_residual() {
    let entries = criterion_gap_residual(&sweep_potential()).unwrap();
    report("criterion 2", &entries);
}

#[test]
fn criterion_3_scaling_covariance() {
    let entries = criterion_scaling(&sweep_potential()).unwrap();
    report("criterion 3", &entries);
}

#[test]
fn criterion_4_m_mu_consistency() {
    let entries = criterion_m_routes(&sweep_potential()).unwrap();
    report("criterion 4", &entries);
}

#[test]
fn criterion_5_limit_constant() {
    let entries = criterion_d_limit(sweep());
    report("criterion 5", &entries);
}

#[test]
fn criterion_6_universal_ratio() {
    let entries = criterion_ratio(sweep());
    report("criterion 6", &entries);
}

#[test]
fn criterion_7_resolvent_link() {
    let entries = criterion_resolvent_link(sweep());
    report("criterion 7", &entries);
}

#[test]
fn criterion_8_diagnostic_decays() {
    let entries = criterion_decays(&sweep_potential(), sweep(), true).unwrap();
    report("criterion 8", &entries);
}
