//! Discontinuous piecewise polynomials on the boundary partition.
//!
//! On each element the local basis is the shifted Legendre family
//! `L_q(t) = P_q(2t - 1)`, `q = 0..=p`, in the local coordinate `t` in
//! `[0, 1]`. Global index of `(element e, degree q)` is `e * (p + 1) + q`.

use crate::error::{Error, Result};
use crate::geometry::{BoundaryMesh, BoundaryPoint};
use crate::quadrature::{integrate_element, QuadRule1D};

pub const MAX_DEGREE: usize = 3;

#[derive(Clone, Debug)]
pub struct MultiplierSpace {
    mesh: BoundaryMesh,
    degree: usize,
}

/// Shifted Legendre polynomial `P_q(2t - 1)`.
pub fn shifted_legendre(q: usize, t: f64) -> f64 {
    let x = 2.0 * t - 1.0;
    let (mut p0, mut p1) = (1.0, x);
    match q {
        0 => 1.0,
        1 => x,
        _ => {
            for n in 2..=q {
                let nf = n as f64;
                let p2 = ((2.0 * nf - 1.0) * x * p1 - (nf - 1.0) * p0) / nf;
                p0 = p1;
                p1 = p2;
            }
            p1
        }
    }
}

impl MultiplierSpace {
    pub fn new(mesh: BoundaryMesh, degree: usize) -> Result<Self> {
        if degree > MAX_DEGREE {
            return Err(Error::config(format!(
                "multiplier degree {degree} exceeds the supported maximum {MAX_DEGREE}"
            )));
        }
        Ok(MultiplierSpace { mesh, degree })
    }

    pub fn mesh(&self) -> &BoundaryMesh {
        &self.mesh
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn local_dim(&self) -> usize {
        self.degree + 1
    }

    pub fn dim(&self) -> usize {
        self.mesh.len() * self.local_dim()
    }

    /// `(element, local degree)` of a global index.
    pub fn split_index(&self, global_index: usize) -> (usize, usize) {
        (global_index / self.local_dim(), global_index % self.local_dim())
    }

    pub fn eval_basis(&self, global_index: usize, s: f64) -> Result<f64> {
        if global_index >= self.dim() {
            return Err(Error::domain(format!(
                "multiplier basis index {global_index} out of range 0..{}",
                self.dim()
            )));
        }
        let bp = self.mesh.point_at(s)?;
        let (element, q) = self.split_index(global_index);
        Ok(if bp.element == element {
            shifted_legendre(q, bp.t)
        } else {
            0.0
        })
    }

    /// Local basis values of the owning element at a boundary point.
    pub fn local_values(&self, t: f64) -> impl Iterator<Item = f64> {
        (0..=self.degree).map(move |q| shifted_legendre(q, t))
    }

    /// `sum_j coeffs[j] mu_j(s)`.
    pub fn evaluate(&self, coeffs: &[f64], s: f64) -> Result<f64> {
        let bp = self.mesh.point_at(s)?;
        Ok(self.evaluate_at(coeffs, &bp))
    }

    /// Evaluation at a boundary point that already knows its element.
    pub fn evaluate_at(&self, coeffs: &[f64], bp: &BoundaryPoint) -> f64 {
        let base = bp.element * self.local_dim();
        self.local_values(bp.t)
            .enumerate()
            .map(|(q, v)| coeffs[base + q] * v)
            .sum()
    }

    /// Diagonal of the `L2(Gamma)` Gram matrix: `|T| / (2q + 1)`.
    pub fn l2_gram_diagonal(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|j| {
                let (e, q) = self.split_index(j);
                self.mesh.elements()[e].length() / (2 * q + 1) as f64
            })
            .collect()
    }

    /// Coefficients of the `L2(Gamma)` projection of `g`.
    pub fn project_l2(&self, g: impl Fn(&BoundaryPoint) -> f64, quad_order: usize) -> Result<Vec<f64>> {
        if quad_order < self.degree + 1 {
            return Err(Error::config(format!(
                "projection needs at least {} quadrature points, got {quad_order}",
                self.degree + 1
            )));
        }
        let rule = QuadRule1D::gauss_legendre(quad_order)?;
        let mut coeffs = Vec::with_capacity(self.dim());
        for e in 0..self.mesh.len() {
            for q in 0..=self.degree {
                let moment = integrate_element(&rule, &self.mesh, e, |bp| g(bp) * shifted_legendre(q, bp.t))?;
                coeffs.push((2 * q + 1) as f64 * moment);
            }
        }
        Ok(coeffs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{partition_boundary, Polygon};
    use crate::quadrature::integrate_boundary;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn space(target_k: f64, p: usize) -> MultiplierSpace {
        MultiplierSpace::new(partition_boundary(&Polygon::unit_square(), target_k).unwrap(), p).unwrap()
    }

    #[test]
    fn dimensions() {
        assert_eq!(space(0.5, 0).dim(), 8);
        assert_eq!(space(0.25, 2).dim(), 48);
        assert!(MultiplierSpace::new(partition_boundary(&Polygon::unit_square(), 0.5).unwrap(), 4).is_err());
    }

    #[test]
    fn local_basis_is_orthogonal() {
        let rule = QuadRule1D::gauss_legendre(10).unwrap();
        for i in 0..=MAX_DEGREE {
            for j in 0..=MAX_DEGREE {
                let v: f64 = rule
                    .iter()
                    .map(|(t, w)| w * shifted_legendre(i, t) * shifted_legendre(j, t))
                    .sum();
                let expected = if i == j { 1.0 / (2 * i + 1) as f64 } else { 0.0 };
                assert!((v - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn basis_examples() {
        let sp = space(0.5, 0);
        assert_eq!(sp.eval_basis(3, 1.7).unwrap(), 1.0);
        assert_eq!(sp.eval_basis(3, 0.2).unwrap(), 0.0);
        let sp1 = space(0.5, 1);
        // element 2 spans [1.0, 1.5); its degree-1 member at the midpoint
        assert!(sp1.eval_basis(2 * 2 + 1, 1.25).unwrap().abs() < 1e-15);
        assert_eq!(sp1.eval_basis(2 * 2 + 1, 1.0).unwrap(), -1.0);
        assert!(sp1.eval_basis(16, 0.1).is_err());
        // shared endpoint belongs to the element that starts there
        assert_eq!(sp.eval_basis(0, 0.5).unwrap(), 0.0);
        assert_eq!(sp.eval_basis(1, 0.5).unwrap(), 1.0);
        // the closing point belongs to the last element
        assert_eq!(sp.eval_basis(7, 4.0).unwrap(), 1.0);
    }

    #[test]
    fn projection_of_constants() {
        let sp = space(0.25, 0);
        let c = sp.project_l2(|_| 1.0, 4).unwrap();
        assert!(c.iter().all(|&v| (v - 1.0).abs() < 1e-14));
        assert!(sp.project_l2(|_| 1.0, 0).is_err());
        let sp2 = space(0.25, 2);
        assert!(sp2.project_l2(|_| 1.0, 2).is_err());
    }

    #[test]
    fn projection_reproduces_linear_on_one_element() {
        let sp = space(0.5, 1);
        let el = 3;
        let e = sp.mesh().elements()[el].clone();
        let g = |bp: &BoundaryPoint| if bp.element == el { bp.s } else { 0.0 };
        let c = sp.project_l2(g, 8).unwrap();
        for i in 0..=20 {
            let s = e.s_start + (e.s_end - e.s_start) * i as f64 / 20.0 * 0.999;
            assert!((sp.evaluate(&c, s).unwrap() - s).abs() < 1e-12);
        }
    }

    #[test]
    fn piecewise_constant_projection_of_sine() {
        let sp = space(0.25, 0);
        assert_eq!(sp.dim(), 16);
        let per = sp.mesh().perimeter();
        let g = |bp: &BoundaryPoint| (2.0 * PI * bp.s / per).sin();
        let c = sp.project_l2(g, 8).unwrap();
        // Oracle: 64-point Gauss mean per element, computed on plain intervals.
        let rule = QuadRule1D::gauss_legendre(64).unwrap();
        for (j, e) in sp.mesh().elements().iter().enumerate() {
            let mean = rule.integrate(e.s_start, e.s_end, |s| (2.0 * PI * s / per).sin()) / e.length();
            assert!((c[j] - mean).abs() < 1e-10);
        }
    }

    proptest! {
        #[test]
        fn polynomial_reproduction(p in 0usize..=3, coeffs in prop::collection::vec(-2.0f64..2.0, 4), el in 0usize..16) {
            let sp = space(0.25, p);
            let e = sp.mesh().elements()[el].clone();
            let poly = |s: f64| {
                let x = s - e.s_start;
                (0..=p).map(|i| coeffs[i] * x.powi(i as i32)).sum::<f64>()
            };
            let c = sp.project_l2(|bp| if bp.element == el { poly(bp.s) } else { 0.0 }, p + 2).unwrap();
            for i in 0..10 {
                let s = e.s_start + e.length() * (i as f64 + 0.5) / 10.0;
                prop_assert!((sp.evaluate(&c, s).unwrap() - poly(s)).abs() < 1e-12);
            }
        }

        #[test]
        fn projection_is_idempotent(p in 0usize..=3, a in -3.0f64..3.0, b in 0.5f64..6.0) {
            let sp = space(0.3, p);
            let g = |bp: &BoundaryPoint| (a * bp.s).sin() + (b * bp.point.x).cos();
            let c1 = sp.project_l2(g, 12).unwrap();
            let c2 = sp.project_l2(|bp| sp.evaluate_at(&c1, bp), 12).unwrap();
            for (x, y) in c1.iter().zip(&c2) {
                prop_assert!((x - y).abs() <= 1e-13 * (1.0 + x.abs()));
            }
        }

        #[test]
        fn best_approximation(p in 0usize..=2, v in prop::collection::vec(-1.0f64..1.0, 48)) {
            let sp = space(0.25, p);
            let g = |bp: &BoundaryPoint| (3.0 * bp.s).sin() * bp.point.y + bp.point.x.powi(5);
            let c = sp.project_l2(g, 12).unwrap();
            let rule = QuadRule1D::gauss_legendre(16).unwrap();
            let err = |coeffs: &[f64]| {
                integrate_boundary(&rule, sp.mesh(), |bp| (g(bp) - sp.evaluate_at(coeffs, bp)).powi(2)).unwrap()
            };
            let other: Vec<f64> = c.iter().zip(&v).map(|(a, b)| a + 0.1 * b).collect();
            prop_assert!(err(&c) <= err(&other) + 1e-15);
        }
    }
}
