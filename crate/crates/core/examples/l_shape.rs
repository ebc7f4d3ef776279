//! Harmonic test solution on the L-shaped domain, with p = 0 and p = 1
//! multipliers.
//!
//! cargo run --release --example l_shape

use std::sync::Arc;

use rbf_lagrange::analysis::{h1_error, l2_boundary_error, ExactKind, ExactSolution};
use rbf_lagrange::assembly::SaddleSystem;
use rbf_lagrange::discretization::{Discretization, KRule, QuadratureSettings};
use rbf_lagrange::geometry::{centers_per_side, Polygon};
use rbf_lagrange::kernels::{Smoothness, WendlandKernel};
use rbf_lagrange::multiplier::MultiplierSpace;
use rbf_lagrange::solver::solve;

fn main() -> rbf_lagrange::Result<()> {
    let r = 0.2;
    let exact = ExactSolution::new(ExactKind::Trig, 0.0)?;
    for p in [0, 1] {
        for n in [9, 17, 33] {
            let polygon = Polygon::l_shape();
            let centers = centers_per_side(&polygon, n)?;
            let mesh = KRule::HxOverR.partition(&polygon, centers.fill_distance(), r)?;
            let disc = Arc::new(Discretization::new(
                polygon,
                centers,
                WendlandKernel::new(Smoothness::C2, r)?,
                MultiplierSpace::new(mesh, p)?,
                &QuadratureSettings::default(),
            )?);
            let system = SaddleSystem::assemble(Arc::clone(&disc), 0.0, |x| exact.f(x), |bp| exact.g(bp))?;
            let sol = solve(&system)?;
            println!(
                "p={p} N={:4} M={:3} H1 {:.4e} flux {:.4e}",
                system.n(),
                system.m(),
                h1_error(&sol, &exact, disc.domain_quadrature())?,
                l2_boundary_error(&sol, &exact, disc.boundary_rule())?
            );
        }
    }
    Ok(())
}
