use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rbf_lagrange::config::{Mode, RunConfig};
use rbf_lagrange::experiment;
use rbf_lagrange::geometry::Point;
use rbf_lagrange::solver::MixedSolution;
use rbf_lagrange::{Error, Result};

#[derive(Parser)]
#[command(
    name = "rbf-lagrange",
    version,
    about = "Meshless Galerkin solver with boundary Lagrange multipliers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's `out`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Single solve: solution dump, one-row CSV and report.
    Solve(RunArgs),
    /// Convergence sweep over the configured grids.
    Sweep(RunArgs),
    /// Native-space interpolation study.
    InterpStudy(RunArgs),
    /// Discrete inf-sup estimate per grid.
    Infsup(RunArgs),
    /// Evaluates a saved solution.
    Evaluate {
        #[arg(long)]
        dump: PathBuf,
        /// `x,y` points for u and its gradient.
        #[arg(long = "point", value_parser = parse_point)]
        points: Vec<Point>,
        /// Arc lengths for the multiplier and the normal derivative.
        #[arg(long = "arc")]
        arcs: Vec<f64>,
    },
}

fn parse_point(s: &str) -> std::result::Result<Point, String> {
    let (x, y) = s.split_once(',').ok_or("expected x,y")?;
    let parse = |v: &str| v.trim().parse::<f64>().map_err(|e| e.to_string());
    Ok(Point::new(parse(x)?, parse(y)?))
}

fn prepare(args: &RunArgs, mode: Mode) -> Result<(RunConfig, PathBuf)> {
    let cfg = RunConfig::load(&args.config)?.with_mode(mode)?;
    if let Some(n) = args.threads {
        if n == 0 {
            return Err(Error::config("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::config(e.to_string()))?;
    }
    let out = args.out.clone().unwrap_or_else(|| cfg.out_dir.clone());
    Ok((cfg, out))
}

fn evaluate(dump: &Path, points: &[Point], arcs: &[f64]) -> Result<()> {
    let sol = MixedSolution::read_dump(BufReader::new(File::open(dump)?))?;
    println!("# {}", sol.params);
    for x in points {
        let (u, g) = sol.evaluate_u_with_grad(x);
        println!("u {:.16e} {:.16e} {:.16e} {:.16e} {:.16e}", x.x, x.y, u, g.x, g.y);
    }
    for &s in arcs {
        println!(
            "lambda {s:.16e} {:.16e} {:.16e}",
            sol.evaluate_lambda(s)?,
            sol.evaluate_normal_derivative(s)?
        );
    }
    Ok(())
}

fn run(command: Command) -> Result<i32> {
    match command {
        Command::Solve(args) => {
            let (cfg, out) = prepare(&args, Mode::Solve)?;
            let r = experiment::run_single(&cfg, &out)?;
            println!("{}", r.params);
            println!(
                "h1_error {:.6e}  l2_lambda_error {:.6e}  cond {:.3e}",
                r.h1_error, r.l2_lambda_error, r.cond_estimate
            );
            Ok(0)
        }
        Command::Sweep(args) => {
            let (cfg, out) = prepare(&args, Mode::Sweep)?;
            let report = experiment::run_sweep(&cfg, &out)?;
            for row in report.record.rows() {
                println!(
                    "N={:5} M={:4} h_X={:.4e} k={:.4e} h1={:.4e} l2={:.4e} ({:.1}s)",
                    row.n_centers,
                    row.n_multipliers,
                    row.fill_distance,
                    row.k,
                    row.h1_error,
                    row.l2_lambda_error,
                    row.runtime_s
                );
            }
            let s = &report.summary;
            if let (Some(h1), Some(l2)) = (s.h1_rate, s.l2_lambda_rate) {
                println!("h1 rate vs h_X {h1:.3}, l2 lambda rate vs k {l2:.3}");
            }
            for f in &s.failed {
                eprintln!("grid {} failed: {}", f.n_per_side, f.error);
            }
            Ok(report.exit_code())
        }
        Command::InterpStudy(args) => {
            let (cfg, out) = prepare(&args, Mode::InterpolationStudy)?;
            let study = experiment::run_interpolation_study(&cfg, &out)?;
            for row in &study.rows {
                println!(
                    "N={:5} h_X={:.4e} l2={:.4e}",
                    row.n_centers, row.fill_distance, row.l2_error
                );
            }
            match (study.rate, study.rate_meaningful) {
                (Some(rate), true) => println!("L2 rate vs h_X {rate:.3}"),
                (_, false) => println!("errors at the quadrature floor; no rate"),
                (None, true) => {}
            }
            Ok(0)
        }
        Command::Infsup(args) => {
            let (cfg, out) = prepare(&args, Mode::InfsupProbe)?;
            let report = experiment::run_infsup_probe(&cfg, &out)?;
            for row in &report.rows {
                println!(
                    "N={:5} M={:4} h_X={:.4e} beta={:.6}",
                    row.n_centers, row.n_multipliers, row.fill_distance, row.beta
                );
            }
            if let Some(slope) = report.slope {
                println!("log-log slope of beta vs h_X {slope:.3}");
            }
            Ok(0)
        }
        Command::Evaluate { dump, points, arcs } => {
            evaluate(&dump, &points, &arcs)?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
