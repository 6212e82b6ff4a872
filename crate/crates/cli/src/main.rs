//! Command-line front end for the radial profile laboratory.
//!
//! Verdicts are printed as single-line JSON; bulk trajectory data streams as
//! CSV with fixed 17-significant-digit formatting, so repeated runs with the
//! same flags are byte-identical.
//!
//! Exit codes: 0 ok, 1 usage, 2 undetermined/out-of-window result,
//! 3 bracket error, 4 no convergence.

// `!(x > 0.0)` rejects NaN together with the wrong sign.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use nodal_shooter::analysis::{classify, RegimeReport, RegimeTag};
use nodal_shooter::integrator::{format_sig17, IntegratorConfig};
use nodal_shooter::nonlin::Params;
use nodal_shooter::picard::picard_solve;
use nodal_shooter::refsolver::reference_solve;
use nodal_shooter::shooting::solve_dirichlet;
use nodal_shooter::{Error, Trajectory};

const EXIT_OK: u8 = 0;
const EXIT_USAGE: u8 = 1;
const EXIT_UNDETERMINED: u8 = 2;
const EXIT_BRACKET: u8 = 3;
const EXIT_NO_CONVERGENCE: u8 = 4;

#[derive(Parser)]
#[command(
    name = "nodal-shooter",
    version,
    about = "Numerical laboratory for the radial profile equation u'' + (d-1)/r u' + u - |u|^{-2θ}u = 0",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify the trajectory launched from u(0) = a and print the verdict as JSON.
    Classify(ClassifyArgs),
    /// Classify a range of initial values and write sweep.csv / zeros.dat.
    Sweep(SweepArgs),
    /// Find Dirichlet initial values with a prescribed interior zero count.
    Shoot(ShootArgs),
    /// Cross-check the integrator against the integral-system construction.
    PicardCheck(PicardCheckArgs),
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct ClassifyArgs {
    /// Initial value u(0).
    #[arg(long)]
    a: f64,
    /// Exponent θ ∈ (0, 1/2).
    #[arg(long)]
    theta: f64,
    /// Real dimension d > 1.
    #[arg(long)]
    dim: f64,
    /// Truncation radius.
    #[arg(long, default_value_t = 200.0)]
    rmax: f64,
    /// Relative integration tolerance (absolute = tol/100).
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Write the trajectory CSV here (events go to an adjacent .events.csv).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also run the fixed-step oracle and print the maximum deviation.
    #[arg(long)]
    oracle: bool,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct SweepArgs {
    #[arg(long)]
    a_from: f64,
    #[arg(long)]
    a_to: f64,
    #[arg(long)]
    a_steps: usize,
    #[arg(long)]
    theta: f64,
    #[arg(long)]
    dim: f64,
    #[arg(long, default_value_t = 200.0)]
    rmax: f64,
    /// Output directory for sweep.csv and zeros.dat.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Worker threads; the output is identical for any value.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct ShootArgs {
    /// Ball radius.
    #[arg(long = "R")]
    radius: f64,
    /// Required interior zero count.
    #[arg(long)]
    zeros: usize,
    #[arg(long)]
    a_min: f64,
    #[arg(long)]
    a_max: f64,
    #[arg(long)]
    theta: f64,
    #[arg(long)]
    dim: f64,
    /// Bisection width on the initial value.
    #[arg(long, default_value_t = 1e-10)]
    tol_a: f64,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct PicardCheckArgs {
    #[arg(long)]
    a: f64,
    #[arg(long)]
    theta: f64,
    #[arg(long)]
    dim: f64,
    /// Startup interval; halved on failure up to 6 times.
    #[arg(long, default_value_t = 0.5)]
    delta: f64,
    /// Grid subintervals.
    #[arg(long, default_value_t = 4096)]
    n: usize,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // clap renders its own message; route usage failures to exit 1
            let _ = err.print();
            return ExitCode::from(if err.use_stderr() {
                EXIT_USAGE
            } else {
                EXIT_OK
            });
        }
    };
    let code = match cli.command {
        Command::Classify(args) => cmd_classify(&args),
        Command::Sweep(args) => cmd_sweep(&args),
        Command::Shoot(args) => cmd_shoot(&args),
        Command::PicardCheck(args) => cmd_picard_check(&args),
    };
    match code {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

fn make_params(dim: f64, theta: f64) -> Result<Params, String> {
    Params::new(dim, theta).map_err(|e| e.to_string())
}

fn config(rmax: f64, tol: f64) -> IntegratorConfig {
    IntegratorConfig {
        rel_tol: tol,
        abs_tol: tol * 1e-2,
        r_max: rmax,
        ..Default::default()
    }
}

fn write_trajectory_files(traj: &Trajectory, path: &Path) -> Result<(), String> {
    let mut csv = Vec::new();
    traj.write_csv(&mut csv).map_err(|e| e.to_string())?;
    fs::write(path, csv).map_err(|e| format!("writing {}: {e}", path.display()))?;
    let events_path = path.with_extension("events.csv");
    let mut csv = Vec::new();
    traj.write_events_csv(&mut csv).map_err(|e| e.to_string())?;
    fs::write(&events_path, csv).map_err(|e| format!("writing {}: {e}", events_path.display()))?;
    Ok(())
}

#[derive(Serialize)]
struct OracleDeviation {
    oracle_max_deviation: f64,
    oracle_richardson_error: f64,
}

fn cmd_classify(args: &ClassifyArgs) -> Result<u8, String> {
    let params = make_params(args.dim, args.theta)?;
    let cfg = config(args.rmax, args.tol);
    let (regime, skeleton, traj) = classify(args.a, &params, &cfg).map_err(|e| e.to_string())?;
    let report = RegimeReport::build(&regime, &skeleton, &traj, &params);
    let mut stdout = std::io::stdout().lock();
    writeln!(
        stdout,
        "{}",
        serde_json::to_string(&report).map_err(|e| e.to_string())?
    )
    .map_err(|e| e.to_string())?;
    if let Some(path) = &args.out {
        write_trajectory_files(&traj, path)?;
    }
    if args.oracle && args.a != 0.0 {
        let run = reference_solve(args.a, &params, 1e-4, args.rmax).map_err(|e| e.to_string())?;
        let mut worst: f64 = 0.0;
        for s in &run.traj.states {
            if let Some(adaptive) = traj.sample(s.r) {
                worst = worst.max((adaptive.u - s.u).abs());
            }
        }
        let line = OracleDeviation {
            oracle_max_deviation: worst,
            oracle_richardson_error: run.richardson_error,
        };
        writeln!(
            stdout,
            "{}",
            serde_json::to_string(&line).map_err(|e| e.to_string())?
        )
        .map_err(|e| e.to_string())?;
    }
    Ok(if report.tag == RegimeTag::Undetermined {
        EXIT_UNDETERMINED
    } else {
        EXIT_OK
    })
}

struct SweepRow {
    a: f64,
    tag: RegimeTag,
    zero_count: usize,
    rho_a: Option<f64>,
    final_attractor: Option<&'static str>,
    e_end: f64,
}

fn cmd_sweep(args: &SweepArgs) -> Result<u8, String> {
    let params = make_params(args.dim, args.theta)?;
    if args.a_steps == 0 {
        return Err("a-steps must be at least 1".into());
    }
    let cfg = config(args.rmax, 1e-10);
    let n = args.a_steps;
    let grid: Vec<f64> = (0..n)
        .map(|i| {
            if n == 1 {
                args.a_from
            } else {
                args.a_from + (args.a_to - args.a_from) * i as f64 / (n - 1) as f64
            }
        })
        .collect();

    let classify_row = |&a: &f64| -> Result<SweepRow, String> {
        let (regime, _, traj) = classify(a, &params, &cfg).map_err(|e| e.to_string())?;
        Ok(SweepRow {
            a,
            tag: regime.tag,
            zero_count: regime.zero_count,
            rho_a: regime.rho_a,
            final_attractor: regime.final_attractor.map(|at| at.as_str()),
            e_end: traj.final_energy(),
        })
    };

    let jobs = args.jobs.max(1).min(n);
    let mut rows: Vec<Option<Result<SweepRow, String>>> = (0..n).map(|_| None).collect();
    if jobs == 1 {
        for (slot, a) in rows.iter_mut().zip(&grid) {
            *slot = Some(classify_row(a));
        }
    } else {
        // contiguous chunks per worker; row i is independent of the split
        let chunk = n.div_ceil(jobs);
        std::thread::scope(|scope| {
            for (rows_chunk, grid_chunk) in rows.chunks_mut(chunk).zip(grid.chunks(chunk)) {
                scope.spawn(move || {
                    for (slot, a) in rows_chunk.iter_mut().zip(grid_chunk) {
                        *slot = Some(classify_row(a));
                    }
                });
            }
        });
    }

    fs::create_dir_all(&args.out).map_err(|e| format!("creating {}: {e}", args.out.display()))?;
    let mut sweep_csv = String::from("a,tag,zero_count,rho_a,final_attractor,E_end\n");
    let mut zeros_dat = String::new();
    for slot in rows {
        let row = slot.expect("every row computed")?;
        let rho = row.rho_a.map(format_sig17).unwrap_or_default();
        let attractor = row.final_attractor.unwrap_or_default();
        sweep_csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            format_sig17(row.a),
            row.tag.as_str(),
            row.zero_count,
            rho,
            attractor,
            format_sig17(row.e_end)
        ));
        zeros_dat.push_str(&format!("{} {}\n", format_sig17(row.a), row.zero_count));
    }
    let sweep_path = args.out.join("sweep.csv");
    fs::write(&sweep_path, sweep_csv)
        .map_err(|e| format!("writing {}: {e}", sweep_path.display()))?;
    let zeros_path = args.out.join("zeros.dat");
    fs::write(&zeros_path, zeros_dat)
        .map_err(|e| format!("writing {}: {e}", zeros_path.display()))?;
    Ok(EXIT_OK)
}

fn cmd_shoot(args: &ShootArgs) -> Result<u8, String> {
    let params = make_params(args.dim, args.theta)?;
    let cfg = IntegratorConfig::default();
    match solve_dirichlet(
        args.radius,
        args.zeros,
        (args.a_min, args.a_max),
        &params,
        &cfg,
        args.tol_a,
    ) {
        Ok(roots) => {
            println!(
                "{}",
                serde_json::to_string(&roots).map_err(|e| e.to_string())?
            );
            Ok(EXIT_OK)
        }
        Err(Error::Bracket(msg)) => {
            eprintln!("error: {msg}");
            Ok(EXIT_BRACKET)
        }
        Err(e) => Err(e.to_string()),
    }
}

#[derive(Serialize)]
struct PicardCheckReport {
    sup_diff: f64,
    sweeps: usize,
    delta: f64,
}

fn cmd_picard_check(args: &PicardCheckArgs) -> Result<u8, String> {
    if args.a == 0.0 {
        return Err("picard-check needs a nonzero initial value".into());
    }
    let params = make_params(args.dim, args.theta)?;
    let mut delta = args.delta;
    if !(delta > 0.0) {
        return Err(format!("delta must be positive, got {delta}"));
    }
    for _ in 0..6 {
        match picard_solve(args.a, delta, args.n, &params, 1e-12, 200) {
            Ok((grid, sweeps)) => {
                let cfg = config(delta * 1.05, 1e-10);
                let traj = nodal_shooter::integrator::integrate(args.a, &params, &cfg)
                    .map_err(|e| e.to_string())?;
                let mut sup: f64 = 0.0;
                for i in 0..=grid.n {
                    let r = grid.radius(i);
                    let s = traj
                        .sample(r)
                        .ok_or("integrator did not cover the interval")?;
                    sup = sup.max((grid.u[i] - s.u).abs());
                }
                let report = PicardCheckReport {
                    sup_diff: sup,
                    sweeps,
                    delta,
                };
                println!(
                    "{}",
                    serde_json::to_string(&report).map_err(|e| e.to_string())?
                );
                return Ok(if sup <= 1e-5 {
                    EXIT_OK
                } else {
                    EXIT_UNDETERMINED
                });
            }
            // no convergence, or the profile approached zero on this
            // interval: retry on the halved interval
            Err(Error::NoConvergence(_)) | Err(Error::Domain(_)) => {
                delta *= 0.5;
            }
            Err(e) => return Err(e.to_string()),
        }
    }
    eprintln!("error: no convergence after 6 delta halvings (final delta = {delta})");
    Ok(EXIT_NO_CONVERGENCE)
}
