//! Gauss rules, cell quadrature on a polygon and boundary integrals.
//!
//! cargo run --example quadrature

use std::f64::consts::PI;

use rbf_lagrange::geometry::{partition_boundary, Point, Polygon};
use rbf_lagrange::kernels::{Smoothness, WendlandKernel};
use rbf_lagrange::quadrature::{integrate_boundary, DomainQuadrature, QuadRule1D};

fn main() {
    let rule = QuadRule1D::gauss_legendre(5).unwrap();
    for (t, w) in rule.iter() {
        println!("node {t:.15} weight {w:.15}");
    }
    println!(
        "int_0^1 t^9 = {:.15} (exact 0.1)",
        rule.integrate(0.0, 1.0, |t| t.powi(9))
    );

    // the C2 kernel integrates to pi/7 over its support
    let kernel = WendlandKernel::new(Smoothness::C2, 0.25).unwrap();
    let square = Polygon::unit_square();
    let center = Point::new(0.5, 0.5);
    for cells in [20, 40, 80, 160] {
        let quad = DomainQuadrature::new(&square, cells, cells, 5).unwrap();
        let v = quad.integrate_domain(|x| kernel.eval(x, &center)).unwrap();
        println!("{cells:>4} cells: {v:.12}  error {:.2e}", (v - PI / 7.0).abs());
    }

    let l = Polygon::l_shape();
    let quad = DomainQuadrature::with_cell_size(&l, 0.05, 5).unwrap();
    println!(
        "L-shape area {:.12} from {} nodes",
        quad.integrate_domain(|_| 1.0).unwrap(),
        quad.len()
    );

    let mesh = partition_boundary(&l, 0.1).unwrap();
    let glq = QuadRule1D::gauss_legendre(8).unwrap();
    let per = integrate_boundary(&glq, &mesh, |_| 1.0).unwrap();
    println!("L-shape perimeter {per:.12} over {} elements", mesh.len());
}
