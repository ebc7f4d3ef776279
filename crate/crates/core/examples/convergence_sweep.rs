//! Convergence sweep from a config file; writes CSV and plot data.
//!
//! cargo run --release --example convergence_sweep [configs/sweep_c2_r0.2.toml]

use std::path::PathBuf;

use rbf_lagrange::config::{Mode, RunConfig};
use rbf_lagrange::experiment::run_sweep;

fn main() -> rbf_lagrange::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/sweep_c2_r0.2.toml"));
    let cfg = RunConfig::load(&path)?.with_mode(Mode::Sweep)?;
    let out = std::env::temp_dir().join("rbf-lagrange-sweep");
    let report = run_sweep(&cfg, &out)?;

    println!(
        "{:>6} {:>4} {:>10} {:>10} {:>12} {:>12}",
        "N", "M", "h_X", "k", "H1", "L2(flux)"
    );
    for row in report.record.rows() {
        println!(
            "{:>6} {:>4} {:>10.4e} {:>10.4e} {:>12.4e} {:>12.4e}",
            row.n_centers, row.n_multipliers, row.fill_distance, row.k, row.h1_error, row.l2_lambda_error
        );
    }
    if let Some(rate) = report.summary.h1_rate {
        println!("H1 rate vs h_X: {rate:.3}");
    }
    if let Some(rate) = report.summary.l2_lambda_rate {
        println!("flux rate vs k: {rate:.3}");
    }
    println!("outputs in {}", out.display());
    Ok(())
}
