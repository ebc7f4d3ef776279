//! Native-space interpolation of sin(pi x) sin(pi y) on refined grids.
//!
//! cargo run --release --example interpolation_study

use std::f64::consts::PI;

use rbf_lagrange::analysis::interpolation_rate_study;
use rbf_lagrange::discretization::QuadratureSettings;
use rbf_lagrange::geometry::{generate_grid_centers, Polygon};
use rbf_lagrange::kernels::{Smoothness, WendlandKernel};

fn main() -> rbf_lagrange::Result<()> {
    let square = Polygon::unit_square();
    let sets = [9, 17, 33]
        .iter()
        .map(|&n| generate_grid_centers(&square, n))
        .collect::<rbf_lagrange::Result<Vec<_>>>()?;
    for smoothness in [Smoothness::C0, Smoothness::C2] {
        let kernel = WendlandKernel::new(smoothness, 0.2)?;
        let study = interpolation_rate_study(
            |x| (PI * x.x).sin() * (PI * x.y).sin(),
            &square,
            &sets,
            &kernel,
            &QuadratureSettings::default(),
        )?;
        println!("{smoothness} (2 tau = {}):", 2.0 * kernel.tau());
        for row in &study.rows {
            println!(
                "  N={:5} h_X={:.4e} q_X={:.4e} L2 error {:.4e} (center residual {:.1e})",
                row.n_centers, row.fill_distance, row.separation, row.l2_error, row.max_center_residual
            );
        }
        if let Some(rate) = study.rate {
            println!("  L2 rate vs h_X: {rate:.3}");
        }
    }
    Ok(())
}
