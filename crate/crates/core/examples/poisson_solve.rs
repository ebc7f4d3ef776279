//! One solve on the unit square with u = x^2 + y^2.
//!
//! cargo run --release --example poisson_solve

use std::sync::Arc;

use rbf_lagrange::analysis::{h1_error, l2_boundary_error, ExactKind, ExactSolution};
use rbf_lagrange::assembly::SaddleSystem;
use rbf_lagrange::discretization::{Discretization, KRule, QuadratureSettings};
use rbf_lagrange::geometry::{generate_grid_centers, Point, Polygon};
use rbf_lagrange::kernels::{Smoothness, WendlandKernel};
use rbf_lagrange::multiplier::MultiplierSpace;
use rbf_lagrange::solver::solve;

fn main() -> rbf_lagrange::Result<()> {
    let r = 0.2;
    let square = Polygon::unit_square();
    let centers = generate_grid_centers(&square, 17)?;
    let kernel = WendlandKernel::new(Smoothness::C2, r)?;
    // k = h_X / r, rounded to whole elements per side
    let mesh = KRule::HxOverR.partition(&square, centers.fill_distance(), r)?;
    let multipliers = MultiplierSpace::new(mesh, 0)?;
    let disc = Arc::new(Discretization::new(
        square,
        centers,
        kernel,
        multipliers,
        &QuadratureSettings::default(),
    )?);

    let exact = ExactSolution::new(ExactKind::Quadratic, 0.0)?;
    let system = SaddleSystem::assemble(Arc::clone(&disc), 0.0, |x| exact.f(x), |bp| exact.g(bp))?;
    println!("{}", system.params);
    println!("A: {} nonzeros, B: {} nonzeros", system.a.nnz(), system.b.nnz());

    let sol = solve(&system)?;
    println!(
        "residual {:.2e}, condition estimate {:.2e}",
        sol.residual_norm, sol.condition_estimate
    );
    println!("H1 error {:.4e}", h1_error(&sol, &exact, disc.domain_quadrature())?);
    println!(
        "L2 flux error {:.4e}",
        l2_boundary_error(&sol, &exact, disc.boundary_rule())?
    );

    for p in [Point::new(0.5, 0.5), Point::new(0.25, 0.75)] {
        println!(
            "u({}, {}) = {:.6} (exact {:.6})",
            p.x,
            p.y,
            sol.evaluate_u(&p),
            exact.u(&p)
        );
    }
    // arc length 1.5 is the middle of the right edge, where du/dn = 2
    println!("du/dn(1.5) = {:.6}", sol.evaluate_normal_derivative(1.5)?);

    let res = sol.galerkin_residuals(&system)?;
    println!("Galerkin residuals: {:.1e} / {:.1e}", res.orthogonality, res.constraint);
    Ok(())
}
