//! Discrete inf-sup estimates with k = h_X / r.
//!
//! cargo run --release --example infsup_probe

use std::path::PathBuf;

use rbf_lagrange::config::{Mode, RunConfig};
use rbf_lagrange::experiment::run_infsup_probe;

fn main() -> rbf_lagrange::Result<()> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/infsup.toml");
    let cfg = RunConfig::load(&path)?.with_mode(Mode::InfsupProbe)?;
    let report = run_infsup_probe(&cfg, &std::env::temp_dir().join("rbf-lagrange-infsup"))?;
    for row in &report.rows {
        println!(
            "N={:5} M={:3} h_X={:.4e} k={:.4e} beta={:.5}",
            row.n_centers, row.n_multipliers, row.fill_distance, row.k, row.beta
        );
    }
    if let Some(slope) = report.slope {
        println!("log-log slope vs h_X: {slope:.3}");
    }
    Ok(())
}
