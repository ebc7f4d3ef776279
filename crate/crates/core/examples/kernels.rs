//! Wendland profiles and scaled kernels.
//!
//! cargo run --example kernels

use rbf_lagrange::geometry::Point;
use rbf_lagrange::kernels::{Smoothness, WendlandKernel};

fn main() {
    let r = 0.2;
    let c0 = WendlandKernel::new(Smoothness::C0, r).unwrap();
    let c2 = WendlandKernel::new(Smoothness::C2, r).unwrap();
    println!("tau: C0 {}, C2 {}", c0.tau(), c2.tau());

    println!("{:>6} {:>12} {:>12}", "rho", "phi_C0", "phi_C2");
    for i in 0..=10 {
        let rho = i as f64 / 10.0;
        println!(
            "{rho:>6.2} {:>12.6} {:>12.6}",
            c0.eval_univariate(rho).unwrap(),
            c2.eval_univariate(rho).unwrap()
        );
    }

    // Phi_r(x) = r^-2 phi(|x| / r)
    let center = Point::new(0.5, 0.5);
    let x = Point::new(0.55, 0.6);
    let (v, g) = c2.eval_and_grad(&x, &center);
    println!(
        "C2 at ({}, {}): value {v:.6}, gradient ({:.6}, {:.6})",
        x.x, x.y, g.x, g.y
    );
    println!("outside the support: {}", c2.eval(&Point::new(0.9, 0.5), &center));
}
