//! Low-density sweep: one row per chemical potential, errors isolated
//! per row, deterministic output independent of thread count.

use bcsgap::asymptotics::{asymptotics_report, HsOpts};
use bcsgap::gap::{solve_gap, GapOpts};
use bcsgap::potentials::Potential;
use bcsgap::tc::{critical_temperature, TcOpts};
use bcsgap::{BcsError, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Sweep options; gap/tc solver settings plus the optional
/// Hilbert–Schmidt diagnostic.
#[derive(Debug, Clone)]
pub struct SweepOpts {
    pub tol: f64,
    pub max_iter: usize,
    pub damping: f64,
    pub hs_diagnostic: bool,
}

impl Default for SweepOpts {
    fn default() -> Self {
        SweepOpts {
            tol: 1e-10,
            max_iter: 30_000,
            damping: 0.5,
            hs_diagnostic: false,
        }
    }
}

/// One mu-point of the sweep. Numeric fields are None on failed rows;
/// `status` is "ok" or the error message.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub mu: f64,
    pub a: f64,
    pub delta_fermi: Option<f64>,
    pub xi: Option<f64>,
    pub tc: Option<f64>,
    pub m_mu: Option<f64>,
    pub m_pred: Option<f64>,
    #[serde(rename = "D")]
    pub d: Option<f64>,
    #[serde(rename = "D_target")]
    pub d_target: Option<f64>,
    pub ratio: Option<f64>,
    pub ratio_target: Option<f64>,
    pub xi_pred: Option<f64>,
    pub tc_pred: Option<f64>,
    pub residual: Option<f64>,
    pub iterations: Option<u64>,
    pub grid_meta: Option<String>,
    pub hs_ratio: Option<f64>,
    pub status: String,
}

/// CSV schema identifier; the column order is fixed.
pub const SWEEP_SCHEMA: &str = "bcsgap-sweep-v1";

const SWEEP_COLUMNS: &str = "mu,a,delta_fermi,xi,tc,m_mu,m_pred,D,D_target,ratio,ratio_target,xi_pred,tc_pred,residual,iterations,grid_meta,hs_ratio,status";

/// Run the sweep; rows come back in mu order regardless of parallelism.
/// The scattering length is computed once and shared. Per-mu failures are
/// recorded in the row and do not abort the sweep.
pub fn run_sweep(pot: &Potential, mus: &[f64], opts: &SweepOpts) -> Result<Vec<SweepRow>> {
    if mus.is_empty() {
        return Ok(Vec::new());
    }
    let a = bcsgap::scattering::scattering_length(pot)?;
    Ok(mus
        .par_iter()
        .map(|&mu| sweep_row(pot, a, mu, opts))
        .collect())
}

pub fn sweep_row(pot: &Potential, a: f64, mu: f64, opts: &SweepOpts) -> SweepRow {
    let mut row = SweepRow {
        mu,
        a,
        delta_fermi: None,
        xi: None,
        tc: None,
        m_mu: None,
        m_pred: None,
        d: None,
        d_target: None,
        ratio: None,
        ratio_target: None,
        xi_pred: None,
        tc_pred: None,
        residual: None,
        iterations: None,
        grid_meta: None,
        hs_ratio: None,
        status: "ok".into(),
    };
    match compute_row(pot, a, mu, opts, &mut row) {
        Ok(()) => row,
        Err(e) => {
            row.status = e.to_string();
            row
        }
    }
}

fn compute_row(
    pot: &Potential,
    a: f64,
    mu: f64,
    opts: &SweepOpts,
    row: &mut SweepRow,
) -> Result<()> {
    let gap_opts = GapOpts {
        tol: opts.tol,
        max_iter: opts.max_iter,
        damping: opts.damping,
        scattering_length: Some(a),
        ..GapOpts::default()
    };
    let sol = solve_gap(pot, mu, &gap_opts)?;
    if !sol.converged {
        return Err(BcsError::NonConvergence {
            iterations: sol.iterations,
            residual: sol.residual,
        });
    }
    let hs_opts = HsOpts::default();
    let report = asymptotics_report(&sol, opts.hs_diagnostic.then_some(&hs_opts))?;
    let tc_res = critical_temperature(
        pot,
        mu,
        &TcOpts {
            scattering_length: Some(a),
            ..TcOpts::default()
        },
    )?;
    row.delta_fermi = Some(sol.delta_fermi);
    row.xi = Some(sol.xi);
    row.tc = Some(tc_res.tc);
    row.m_mu = Some(report.m_mu);
    row.m_pred = Some(report.m_pred);
    row.d = Some(report.d);
    row.d_target = Some(report.d_target);
    row.ratio = Some(sol.xi / tc_res.tc);
    row.ratio_target = Some(bcsgap::consts::gap_tc_ratio_limit());
    row.xi_pred = Some(report.xi_pred);
    row.tc_pred = Some(report.tc_pred);
    row.residual = Some(sol.residual);
    row.iterations = Some(sol.iterations as u64);
    row.grid_meta = Some(sol.grid.meta());
    row.hs_ratio = report.a_hs_ratio;
    Ok(())
}

/// Deterministic cell formatting; scientific notation outside a readable
/// decimal window.
fn fmt_f64(x: f64) -> String {
    let ax = x.abs();
    if x == 0.0 || (1e-4..1e7).contains(&ax) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// Render rows as the versioned CSV table.
pub fn rows_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::new();
    out.push_str(&format!("# {SWEEP_SCHEMA}\n"));
    out.push_str(SWEEP_COLUMNS);
    out.push('\n');
    for r in rows {
        let cells = [
            fmt_f64(r.mu),
            fmt_f64(r.a),
            fmt_opt(r.delta_fermi),
            fmt_opt(r.xi),
            fmt_opt(r.tc),
            fmt_opt(r.m_mu),
            fmt_opt(r.m_pred),
            fmt_opt(r.d),
            fmt_opt(r.d_target),
            fmt_opt(r.ratio),
            fmt_opt(r.ratio_target),
            fmt_opt(r.xi_pred),
            fmt_opt(r.tc_pred),
            fmt_opt(r.residual),
            r.iterations.map(|x| x.to_string()).unwrap_or_default(),
            r.grid_meta.clone().map(quote_csv).unwrap_or_default(),
            fmt_opt(r.hs_ratio),
            quote_csv(r.status.clone()),
        ];
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn quote_csv(s: String) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s
    }
}

/// Render rows as a JSON document with the schema tag.
pub fn rows_to_json(rows: &[SweepRow]) -> String {
    let doc = serde_json::json!({
        "schema": SWEEP_SCHEMA,
        "rows": rows,
    });
    serde_json::to_string_pretty(&doc).expect("serializable")
}

/// Parse `a:b:n` as n geometric points from a down to b.
pub fn parse_mu_range(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(BcsError::InvalidArgument(format!(
            "mu range '{spec}' must have the form start:end:count"
        )));
    }
    let a: f64 = parts[0]
        .parse()
        .map_err(|_| BcsError::InvalidArgument(format!("bad start in '{spec}'")))?;
    let b: f64 = parts[1]
        .parse()
        .map_err(|_| BcsError::InvalidArgument(format!("bad end in '{spec}'")))?;
    let n: usize = parts[2]
        .parse()
        .map_err(|_| BcsError::InvalidArgument(format!("bad count in '{spec}'")))?;
    if !(a > 0.0 && b > 0.0) {
        return Err(BcsError::InvalidArgument(
            "mu range endpoints must be positive".into(),
        ));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    if n == 1 {
        return Ok(vec![a]);
    }
    Ok((0..n)
        .map(|k| a * (b / a).powf(k as f64 / (n - 1) as f64))
        .collect())
}

/// Parse a comma-separated list of mu values.
pub fn parse_mu_list(spec: &str) -> Result<Vec<f64>> {
    spec.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| BcsError::InvalidArgument(format!("bad mu value '{s}'")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use bcsgap::potentials::{Family, Potential};

    #[test]
    fn empty_mu_list_gives_empty_output() {
        let pot = Potential::new(Family::Gaussian, 1.0, 1.0).unwrap();
        let rows = run_sweep(&pot, &[], &SweepOpts::default()).unwrap();
        assert!(rows.is_empty());
        let csv = rows_to_csv(&rows);
        assert!(csv.starts_with("# bcsgap-sweep-v1\nmu,a,"));
    }

    #[test]
    fn below_floor_row_is_isolated() {
        let pot = Potential::new(Family::Gaussian, 1.0, 1.0).unwrap();
        let rows = run_sweep(&pot, &[0.1, 1e-8], &SweepOpts::default()).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].status, "ok");
        assert!(rows[0].xi.is_some());
        assert!(rows[1].status.contains("floor"), "status: {}", rows[1].status);
        assert!(rows[1].xi.is_none());
        // failed rows leave numeric cells empty in the CSV
        let csv = rows_to_csv(&rows);
        let bad_line = csv.lines().last().unwrap();
        assert!(bad_line.contains(",,"));
    }

    #[test]
    fn geometric_range_parsing() {
        let mus = parse_mu_range("0.3:0.003:3").unwrap();
        assert_eq!(mus.len(), 3);
        assert!((mus[0] - 0.3).abs() < 1e-15);
        assert!((mus[1] - 0.03).abs() < 1e-12);
        assert!((mus[2] - 0.003).abs() < 1e-14);
        assert!(parse_mu_range("0.3:0.003").is_err());
        assert!(parse_mu_range("x:0.003:3").is_err());
        assert!(parse_mu_range("0.3:0.003:0").unwrap().is_empty());
        assert_eq!(parse_mu_list("0.1, 0.2").unwrap(), vec![0.1, 0.2]);
    }
}
