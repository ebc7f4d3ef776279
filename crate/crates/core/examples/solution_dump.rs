//! Saving a solution and evaluating the reloaded copy.
//!
//! cargo run --release --example solution_dump

use std::io::BufReader;
use std::path::PathBuf;

use rbf_lagrange::config::{Mode, RunConfig};
use rbf_lagrange::experiment::run_single;
use rbf_lagrange::geometry::Point;
use rbf_lagrange::solver::MixedSolution;

fn main() -> rbf_lagrange::Result<()> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/solve.toml");
    let cfg = RunConfig::load(&path)?.with_mode(Mode::Solve)?;
    let out = std::env::temp_dir().join("rbf-lagrange-solve");
    let report = run_single(&cfg, &out)?;
    println!("{}: H1 error {:.4e}", report.params, report.h1_error);

    let file = std::fs::File::open(out.join("solution.dump"))?;
    let sol = MixedSolution::read_dump(BufReader::new(file))?;
    let x = Point::new(0.3, 0.7);
    println!("reloaded u({}, {}) = {:.6}", x.x, x.y, sol.evaluate_u(&x));
    println!("lambda(0.5) = {:.6}", sol.evaluate_lambda(0.5)?);
    Ok(())
}
