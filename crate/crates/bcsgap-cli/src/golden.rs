//! Golden reference files: frozen derived values for one potential with
//! the tolerances and settings that produced them. Comparison failures are
//! verification failures, not errors.

use crate::verify::CriterionEntry;
use bcsgap::gap::{solve_gap, GapOpts};
use bcsgap::potentials::Potential;
use bcsgap::tc::{critical_temperature, TcOpts};
use bcsgap::Result;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GoldenFile {
    pub schema: String,
    pub potential: String,
    pub settings: BTreeMap<String, String>,
    pub values: BTreeMap<String, f64>,
    pub tolerances: BTreeMap<String, f64>,
}

pub const GOLDEN_SCHEMA: &str = "bcsgap-golden-v1";

/// Reference mu for the solver-derived golden values.
const GOLDEN_MU: f64 = 0.1;

fn reference_values(pot: &Potential) -> Result<BTreeMap<String, f64>> {
    let mut values = BTreeMap::new();
    let rep = bcsgap::scattering::scattering_report(pot)?;
    values.insert("a_bs".into(), rep.a_bs);
    values.insert("a_ode".into(), rep.a_ode);
    values.insert("a_born".into(), rep.a_born);
    values.insert("lowest_bs_eigenvalue".into(), rep.lowest_bs_eigenvalue);
    if pot.has_nonpositive_transform() {
        let opts = GapOpts {
            scattering_length: Some(rep.a_bs),
            ..GapOpts::default()
        };
        let sol = solve_gap(pot, GOLDEN_MU, &opts)?;
        values.insert("delta_fermi_mu0.1".into(), sol.delta_fermi);
        values.insert("xi_mu0.1".into(), sol.xi);
        values.insert("m_mu_mu0.1".into(), bcsgap::asymptotics::m_mu_split(&sol)?);
        let tc = critical_temperature(
            pot,
            GOLDEN_MU,
            &TcOpts {
                scattering_length: Some(rep.a_bs),
                ..TcOpts::default()
            },
        )?;
        values.insert("tc_mu0.1".into(), tc.tc);
    }
    Ok(values)
}

fn default_tolerances(values: &BTreeMap<String, f64>) -> BTreeMap<String, f64> {
    values
        .keys()
        .map(|k| {
            let tol = match k.as_str() {
                "a_bs" | "a_ode" => 1e-7,
                "a_born" => 1e-9,
                "lowest_bs_eigenvalue" => 1e-5,
                "tc_mu0.1" => 1e-6,
                _ => 1e-7,
            };
            (k.clone(), tol)
        })
        .collect()
}

/// Compute current values and write them as a golden file.
pub fn write_golden(pot: &Potential, path: &Path) -> Result<GoldenFile> {
    let values = reference_values(pot)?;
    let tolerances = default_tolerances(&values);
    let mut settings = BTreeMap::new();
    settings.insert("mu".into(), format!("{GOLDEN_MU}"));
    settings.insert("gap_grid".into(), "128/64/64".into());
    settings.insert("tc_grid".into(), "96/48/48, tol 1e-8".into());
    let golden = GoldenFile {
        schema: GOLDEN_SCHEMA.into(),
        potential: pot.to_string(),
        settings,
        values,
        tolerances,
    };
    let text = serde_json::to_string_pretty(&golden).expect("serializable");
    std::fs::write(path, text + "\n")
        .map_err(|e| bcsgap::BcsError::InvalidArgument(format!("cannot write {path:?}: {e}")))?;
    Ok(golden)
}

/// Recompute and compare against a stored golden file; one entry per key.
pub fn compare_golden(pot: &Potential, path: &Path) -> Result<Vec<CriterionEntry>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| bcsgap::BcsError::InvalidArgument(format!("cannot read {path:?}: {e}")))?;
    let golden: GoldenFile = serde_json::from_str(&text)
        .map_err(|e| bcsgap::BcsError::InvalidArgument(format!("bad golden file {path:?}: {e}")))?;
    if golden.potential != pot.to_string() {
        return Ok(vec![CriterionEntry {
            name: "golden-file".into(),
            measured: f64::NAN,
            target: 0.0,
            tolerance: 0.0,
            pass: false,
        }]);
    }
    let current = reference_values(pot)?;
    let mut entries = Vec::new();
    for (key, &expect) in &golden.values {
        let tol = golden.tolerances.get(key).copied().unwrap_or(1e-7);
        let got = current.get(key).copied().unwrap_or(f64::NAN);
        let rel = (got - expect).abs() / expect.abs().max(1e-300);
        entries.push(CriterionEntry {
            name: format!("golden:{key}"),
            measured: rel,
            target: 0.0,
            tolerance: tol,
            pass: rel <= tol,
        });
    }
    Ok(entries)
}
