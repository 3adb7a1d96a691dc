//! Cross-module invariants: admissibility of the catalog, the band bound
//! on the energy gap, and the sign of the renormalized momentum integral
//! in the deep regime.

use bcsgap::gap::{solve_gap, GapOpts};
use bcsgap::potentials::{check_admissible, Family, Potential};
use bcsgap::quadrature::build_grid;
use bcsgap::GapSolution;

const A_GAUSSIAN11: f64 = -4.7126705106;

#[test]
fn gaussian_passes_every_admissibility_check() {
    let pot = Potential::new(Family::Gaussian, 1.0, 1.0).unwrap();
    let report = check_admissible(&pot);
    assert!(report.all_ok(), "{report:?}");
    assert!(report.scattering_length < 0.0);
}

#[test]
fn exponential_passes_every_admissibility_check() {
    let pot = Potential::new(Family::Exponential, 1.0, 1.0).unwrap();
    let report = check_admissible(&pot);
    assert!(report.all_ok(), "{report:?}");
}

#[test]
fn square_well_fails_only_the_transform_sign() {
    let pot = Potential::new(Family::SquareWell, 1.0, 1.0).unwrap();
    let report = check_admissible(&pot);
    assert!(!report.all_ok());
    assert!(!report.vhat_nonpositive);
    assert!(report.l1_finite && report.weighted_l1_finite && report.sobolev_ok);
    assert!(report.a_negative && report.bs_spectrum_ok);
}

/// Xi >= (1 - eps) min_{|p^2 - mu| <= Xi} Delta(p), with
/// eps = 10 * Lipschitz * band / mu estimated from the solution itself.
#[test]
fn energy_gap_dominates_band_minimum_of_delta() {
    let pot = Potential::new(Family::Gaussian, 1.0, 1.0).unwrap();
    for &mu in &[0.1, 0.01] {
        let sol = solve_gap(
            &pot,
            mu,
            &GapOpts {
                scattering_length: Some(A_GAUSSIAN11),
                ..GapOpts::default()
            },
        )
        .unwrap();
        let interp = sol.interpolant().unwrap();
        let band = sol.xi / mu; // in s units
        let mut min_band = f64::INFINITY;
        let mut lipschitz: f64 = 0.0;
        let n_scan = 200;
        let mut prev: Option<(f64, f64)> = None;
        for k in 0..=n_scan {
            let s = -band + 2.0 * band * k as f64 / n_scan as f64;
            let v = interp.eval_s(s);
            min_band = min_band.min(v);
            if let Some((sp, vp)) = prev {
                // slope in p: ds -> dp = mu ds / (2 p)
                let p = (mu * (1.0 + s)).sqrt();
                lipschitz = lipschitz.max(((v - vp) / ((s - sp) * mu / (2.0 * p))).abs());
            }
            prev = Some((s, v));
        }
        let eps = 10.0 * lipschitz * (sol.xi / mu) / mu;
        assert!(
            sol.xi >= (1.0 - eps.min(0.5)) * min_band,
            "mu = {mu}: xi = {}, band min = {min_band}, eps = {eps}",
            sol.xi
        );
        assert!(sol.xi <= sol.delta_fermi);
    }
}

/// m_mu stays positive in the deep asymptotic regime 0 < Delta/mu < 1e-2.
#[test]
fn m_mu_positive_in_deep_regime() {
    let pot = Potential::new(Family::Gaussian, 1.0, 1.0).unwrap();
    for &x in &[1e-3, 1e-5, 1e-7] {
        let grid = build_grid(0.25, (x * 1e-2f64).max(1e-12), 40.0, 128, 64, 64).unwrap();
        let delta = vec![x * 0.25; grid.len()];
        let sol = GapSolution::synthetic(&pot, 0.25, grid, delta).unwrap();
        let m = bcsgap::asymptotics::m_mu_split(&sol).unwrap();
        assert!(m > 0.0, "m = {m} at x = {x}");
    }
}

/// Delta(sqrt(mu))/mu^{3/4} stays bounded (here: decreasing) as mu falls.
#[test]
fn fermi_gap_bounded_by_three_quarters_power() {
    let pot = Potential::new(Family::Gaussian, 1.0, 1.0).unwrap();
    let mut prev = f64::INFINITY;
    for &mu in &[0.3, 0.04, 4e-3, 4e-4] {
        let sol = solve_gap(
            &pot,
            mu,
            &GapOpts {
                scattering_length: Some(A_GAUSSIAN11),
                ..GapOpts::default()
            },
        )
        .unwrap();
        let scaled = sol.delta_fermi / mu.powf(0.75);
        assert!(scaled < prev, "not decreasing at mu = {mu}");
        prev = scaled;
    }
}

/// The D diagnostic of real solves decreases toward its limit on the
/// small-mu side of a geometric sweep.
#[test]
fn d_diagnostic_decreasing_at_small_mu() {
    let pot = Potential::new(Family::Gaussian, 1.0, 1.0).unwrap();
    let target = bcsgap::consts::d_limit();
    let mut prev = f64::INFINITY;
    for &mu in &[4e-3, 1.2e-3, 4e-4] {
        let sol = solve_gap(
            &pot,
            mu,
            &GapOpts {
                scattering_length: Some(A_GAUSSIAN11),
                ..GapOpts::default()
            },
        )
        .unwrap();
        let d = bcsgap::asymptotics::diagnostic_d(mu, sol.xi, A_GAUSSIAN11).unwrap();
        let dev = (d - target).abs();
        assert!(dev < prev, "not decreasing at mu = {mu}: {dev} vs {prev}");
        prev = dev;
    }
}
