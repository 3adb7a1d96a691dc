//! bcsgap: gap-equation solves, scattering lengths, critical temperatures,
//! low-density sweeps, and the acceptance verifier for attractive radial
//! wells.
//!
//! Exit codes: 0 success, 1 verification failure, 2 invalid arguments,
//! 3 numeric failure.

use bcsgap::gap::{solve_gap, GapOpts};
use bcsgap::potentials::{check_admissible, Potential};
use bcsgap::tc::{critical_temperature, TcOpts};
use bcsgap::BcsError;
use bcsgap_cli::{
    parse_mu_list, parse_mu_range, run_sweep, run_verify, rows_to_csv, rows_to_json,
    write_golden, Profile, SweepOpts,
};
use clap::{Parser, Subcommand};
use serde::Serialize;
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "bcsgap", version, about = "Zero-temperature gap equation, scattering length, and low-density diagnostics for radial wells")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Scattering length by both routes plus the spectral check.
    Scatlen {
        /// Potential as family:lambda:sigma, e.g. gaussian:1.0:1.0
        potential: String,
    },
    /// Solve the gap equation at one chemical potential.
    Gap {
        potential: String,
        #[arg(long)]
        mu: f64,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        max_iter: Option<usize>,
        #[arg(long)]
        damping: Option<f64>,
        /// Dump the (p, delta, dispersion) profile to this path.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Format of the profile dump: csv or json.
        #[arg(long, default_value = "csv")]
        format: String,
    },
    /// Critical temperature from the linearized criterion.
    Tc {
        potential: String,
        #[arg(long)]
        mu: f64,
    },
    /// Low-density sweep over a list or geometric range of mu.
    Sweep {
        potential: String,
        /// Geometric range start:end:count, e.g. 0.3:2e-4:10
        #[arg(long)]
        mu_range: Option<String>,
        /// Comma-separated explicit mu values.
        #[arg(long)]
        mu: Option<String>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        max_iter: Option<usize>,
        #[arg(long)]
        damping: Option<f64>,
        /// Also compute the coarse Hilbert–Schmidt diagnostic per row.
        #[arg(long)]
        hs_diagnostic: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        /// csv (default) or json.
        #[arg(long, default_value = "csv")]
        format: String,
    },
    /// Run the acceptance criteria; exit 0 iff all pass.
    Verify {
        potential: String,
        #[arg(long, default_value = "quick")]
        profile: String,
        /// Compare against a stored golden file.
        #[arg(long)]
        golden: Option<PathBuf>,
        /// Recompute and write a golden file, then exit.
        #[arg(long)]
        write_golden: Option<PathBuf>,
    },
    /// Admissibility report for a potential.
    CheckPotential { potential: String },
    /// Dump a momentum grid as CSV (node, weight, tag).
    GridDump {
        potential: String,
        #[arg(long)]
        mu: f64,
        #[arg(long)]
        inner_scale: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() {
    // BCSGAP_THREADS caps sweep parallelism.
    if let Ok(threads) = std::env::var("BCSGAP_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build_global();
        }
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}

fn print_json<T: Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("serializable"));
}

fn write_or_print(out: Option<&PathBuf>, text: &str) -> bcsgap::Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| BcsError::InvalidArgument(format!("cannot write {path:?}: {e}"))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> bcsgap::Result<i32> {
    match cli.cmd {
        Cmd::Scatlen { potential } => {
            let pot = Potential::parse(&potential)?;
            let rep = bcsgap::scattering::scattering_report(&pot)?;
            #[derive(Serialize)]
            struct Out {
                a_bs: f64,
                a_ode: f64,
                a_born: f64,
                lowest_bs_eigenvalue: f64,
            }
            print_json(&Out {
                a_bs: rep.a_bs,
                a_ode: rep.a_ode,
                a_born: rep.a_born,
                lowest_bs_eigenvalue: rep.lowest_bs_eigenvalue,
            });
            Ok(0)
        }
        Cmd::Gap {
            potential,
            mu,
            tol,
            max_iter,
            damping,
            out,
            format,
        } => {
            let pot = Potential::parse(&potential)?;
            let mut opts = GapOpts::default();
            if let Some(t) = tol {
                opts.tol = t;
            }
            if let Some(m) = max_iter {
                opts.max_iter = m;
            }
            if let Some(d) = damping {
                opts.damping = d;
            }
            let sol = solve_gap(&pot, mu, &opts)?;
            let mut summary = sol.summary();
            summary.functional = bcsgap::gap::bcs_functional(&sol)?;
            print_json(&summary);
            if let Some(path) = out {
                let text = match format.as_str() {
                    "csv" => {
                        let mut t = String::from("p,delta,dispersion\n");
                        for i in 0..sol.grid.len() {
                            t.push_str(&format!(
                                "{},{},{}\n",
                                sol.grid.nodes[i], sol.delta[i], sol.dispersion[i]
                            ));
                        }
                        t
                    }
                    "json" => {
                        let rows: Vec<_> = (0..sol.grid.len())
                            .map(|i| {
                                serde_json::json!({
                                    "p": sol.grid.nodes[i],
                                    "delta": sol.delta[i],
                                    "dispersion": sol.dispersion[i],
                                })
                            })
                            .collect();
                        serde_json::to_string_pretty(&rows).expect("serializable") + "\n"
                    }
                    other => {
                        return Err(BcsError::InvalidArgument(format!(
                            "unknown format '{other}' (expected csv or json)"
                        )))
                    }
                };
                write_or_print(Some(&path), &text)?;
            }
            Ok(0)
        }
        Cmd::Tc { potential, mu } => {
            let pot = Potential::parse(&potential)?;
            let res = critical_temperature(&pot, mu, &TcOpts::default())?;
            print_json(&res);
            Ok(0)
        }
        Cmd::Sweep {
            potential,
            mu_range,
            mu,
            tol,
            max_iter,
            damping,
            hs_diagnostic,
            out,
            format,
        } => {
            let pot = Potential::parse(&potential)?;
            let mus = match (mu_range, mu) {
                (Some(r), None) => parse_mu_range(&r)?,
                (None, Some(list)) => parse_mu_list(&list)?,
                (None, None) => {
                    return Err(BcsError::InvalidArgument(
                        "sweep needs --mu-range or --mu".into(),
                    ))
                }
                (Some(_), Some(_)) => {
                    return Err(BcsError::InvalidArgument(
                        "use either --mu-range or --mu, not both".into(),
                    ))
                }
            };
            let mut opts = SweepOpts {
                hs_diagnostic,
                ..SweepOpts::default()
            };
            if let Some(t) = tol {
                opts.tol = t;
            }
            if let Some(m) = max_iter {
                opts.max_iter = m;
            }
            if let Some(d) = damping {
                opts.damping = d;
            }
            let rows = run_sweep(&pot, &mus, &opts)?;
            let text = match format.as_str() {
                "csv" => rows_to_csv(&rows),
                "json" => rows_to_json(&rows) + "\n",
                other => {
                    return Err(BcsError::InvalidArgument(format!(
                        "unknown format '{other}' (expected csv or json)"
                    )))
                }
            };
            write_or_print(out.as_ref(), &text)?;
            Ok(0)
        }
        Cmd::Verify {
            potential,
            profile,
            golden,
            write_golden: write_path,
        } => {
            let pot = Potential::parse(&potential)?;
            if let Some(path) = write_path {
                let golden = write_golden(&pot, &path)?;
                eprintln!("wrote golden file for {} to {path:?}", golden.potential);
                return Ok(0);
            }
            let profile: Profile = profile.parse()?;
            let report = run_verify(&pot, profile, golden.as_deref())?;
            print_json(&report);
            Ok(if report.overall { 0 } else { 1 })
        }
        Cmd::CheckPotential { potential } => {
            let pot = Potential::parse(&potential)?;
            let report = check_admissible(&pot);
            print_json(&report);
            Ok(0)
        }
        Cmd::GridDump {
            potential,
            mu,
            inner_scale,
            out,
        } => {
            let pot = Potential::parse(&potential)?;
            let scale = inner_scale.unwrap_or(1e-6);
            let grid =
                bcsgap::quadrature::build_grid(mu, scale, 40.0 / pot.range(), 128, 64, 64)?;
            let mut text = String::from("node,weight,tag\n");
            for i in 0..grid.len() {
                text.push_str(&format!(
                    "{},{},{}\n",
                    grid.nodes[i],
                    grid.weights[i],
                    match grid.region_tags[i] {
                        bcsgap::quadrature::RegionTag::Inner => "inner",
                        bcsgap::quadrature::RegionTag::Wing => "wing",
                        bcsgap::quadrature::RegionTag::Tail => "tail",
                    }
                ));
            }
            write_or_print(out.as_ref(), &text)?;
            Ok(0)
        }
    }
}
