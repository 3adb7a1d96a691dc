//! Solve the gap equation at a few chemical potentials and print the
//! low-density diagnostics next to their predicted limits.

use bcsgap::asymptotics::{asymptotics_report, predictions};
use bcsgap::gap::{solve_gap, GapOpts};
use bcsgap::potentials::Potential;
use bcsgap::tc::{critical_temperature, TcOpts};

fn main() -> bcsgap::Result<()> {
    let pot = Potential::parse("gaussian:1.0:1.0")?;
    let a = bcsgap::scattering::scattering_length(&pot)?;
    println!("scattering length a = {a:.8}");
    println!("mu        xi            D        tc            xi/tc     (limit {:.4})",
        bcsgap::consts::gap_tc_ratio_limit());
    for mu in [0.1, 0.01, 1e-3] {
        let opts = GapOpts { scattering_length: Some(a), ..GapOpts::default() };
        let sol = solve_gap(&pot, mu, &opts)?;
        let report = asymptotics_report(&sol, None)?;
        let tc = critical_temperature(&pot, mu, &TcOpts {
            scattering_length: Some(a),
            ..TcOpts::default()
        })?;
        let p = predictions(mu, a)?;
        println!(
            "{mu:<9.1e} {:<13.6e} {:+.5} {:<13.6e} {:.6}   (xi_pred {:.3e})",
            sol.xi, report.d, tc.tc, sol.xi / tc.tc, p.xi_pred
        );
    }
    Ok(())
}
