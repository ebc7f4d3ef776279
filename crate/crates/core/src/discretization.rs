//! Bundles the trial space, multiplier space and quadrature of one run.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{partition_boundary, BoundaryMesh, CenterSet, Point, Polygon};
use crate::kernels::WendlandKernel;
use crate::multiplier::MultiplierSpace;
use crate::neighbors::PointIndex;
use crate::params::ParameterRecord;
use crate::quadrature::{DomainQuadrature, QuadRule1D};

/// How the domain cell size is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum CellRule {
    /// `min(h_X, r) / 2`, aligned to the center grid when there is one.
    Auto,
    Fixed(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSettings {
    pub points_per_cell: usize,
    pub boundary_points: usize,
    pub cell_rule: CellRule,
    /// Uniform refinement factor on top of the cell rule: cells are split
    /// `refinement` times per direction and boundary points multiplied.
    pub refinement: usize,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        QuadratureSettings {
            points_per_cell: 5,
            boundary_points: 16,
            cell_rule: CellRule::Auto,
            refinement: 1,
        }
    }
}

impl QuadratureSettings {
    pub fn refined(self, factor: usize) -> Self {
        QuadratureSettings {
            refinement: self.refinement * factor,
            ..self
        }
    }

    pub fn domain_rule(&self, polygon: &Polygon, centers: &CenterSet, r: f64) -> Result<DomainQuadrature> {
        if self.refinement == 0 || self.points_per_cell == 0 {
            return Err(Error::config(
                "quadrature refinement and points per cell must be positive",
            ));
        }
        match self.cell_rule {
            CellRule::Fixed(size) => {
                DomainQuadrature::with_cell_size(polygon, size / self.refinement as f64, self.points_per_cell)
            }
            CellRule::Auto => {
                let target = 0.5 * centers.fill_distance().min(r);
                match centers.grid_intervals() {
                    Some(m) if polygon.is_unit_square() => {
                        let spacing = 1.0 / m as f64;
                        let per_interval = (spacing / target * (1.0 - 1e-12)).ceil().max(1.0) as usize;
                        let n = m * per_interval * self.refinement;
                        DomainQuadrature::new(polygon, n, n, self.points_per_cell)
                    }
                    _ => {
                        DomainQuadrature::with_cell_size(polygon, target / self.refinement as f64, self.points_per_cell)
                    }
                }
            }
        }
    }

    pub fn boundary_rule(&self) -> Result<QuadRule1D> {
        QuadRule1D::gauss_legendre(self.boundary_points * self.refinement.max(1))
    }
}

/// Rule producing the boundary partition.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum KRule {
    /// `k ~ h_X / r`: each edge of length `L` gets
    /// `max(1, round(L * r / h_X))` elements.
    HxOverR,
    /// Fixed target element size.
    Target(f64),
}

impl KRule {
    pub fn partition(&self, polygon: &Polygon, fill_distance: f64, r: f64) -> Result<BoundaryMesh> {
        match *self {
            KRule::Target(k) => partition_boundary(polygon, k),
            KRule::HxOverR => {
                let counts = (0..polygon.num_edges())
                    .map(|e| elements_for_length(polygon.edge_length(e), fill_distance, r))
                    .collect();
                BoundaryMesh::with_counts(polygon, counts)
            }
        }
    }
}

/// Element count of the `h_X / r` rule on a side of the given length.
pub fn elements_for_length(length: f64, fill_distance: f64, r: f64) -> usize {
    (length * r / fill_distance).round().max(1.0) as usize
}

/// Everything needed to assemble, solve and evaluate one discrete problem.
#[derive(Clone, Debug)]
pub struct Discretization {
    polygon: Polygon,
    centers: CenterSet,
    kernel: WendlandKernel,
    multipliers: MultiplierSpace,
    domain_quad: DomainQuadrature,
    boundary_rule: QuadRule1D,
    center_index: PointIndex,
}

impl Discretization {
    pub fn new(
        polygon: Polygon,
        centers: CenterSet,
        kernel: WendlandKernel,
        multipliers: MultiplierSpace,
        quad: &QuadratureSettings,
    ) -> Result<Self> {
        let domain_quad = quad.domain_rule(&polygon, &centers, kernel.scale())?;
        let boundary_rule = quad.boundary_rule()?;
        if boundary_rule.order() < multipliers.degree() + 3 {
            return Err(Error::config(format!(
                "boundary rule needs at least {} points for degree {}",
                multipliers.degree() + 3,
                multipliers.degree()
            )));
        }
        Ok(Self::from_parts(
            polygon,
            centers,
            kernel,
            multipliers,
            domain_quad,
            boundary_rule,
        ))
    }

    pub fn from_parts(
        polygon: Polygon,
        centers: CenterSet,
        kernel: WendlandKernel,
        multipliers: MultiplierSpace,
        domain_quad: DomainQuadrature,
        boundary_rule: QuadRule1D,
    ) -> Self {
        let center_index = PointIndex::new(centers.points(), kernel.scale());
        Discretization {
            polygon,
            centers,
            kernel,
            multipliers,
            domain_quad,
            boundary_rule,
            center_index,
        }
    }

    pub fn polygon(&self) -> &Polygon {
        &self.polygon
    }

    pub fn centers(&self) -> &CenterSet {
        &self.centers
    }

    pub fn kernel(&self) -> &WendlandKernel {
        &self.kernel
    }

    pub fn multipliers(&self) -> &MultiplierSpace {
        &self.multipliers
    }

    pub fn domain_quadrature(&self) -> &DomainQuadrature {
        &self.domain_quad
    }

    pub fn boundary_rule(&self) -> &QuadRule1D {
        &self.boundary_rule
    }

    pub fn center_index(&self) -> &PointIndex {
        &self.center_index
    }

    pub fn params(&self, kappa: f64) -> ParameterRecord {
        ParameterRecord {
            n_centers: self.centers.len(),
            n_multipliers: self.multipliers.dim(),
            kappa,
            fill_distance: self.centers.fill_distance(),
            k: self.multipliers.mesh().mesh_size(),
            r: self.kernel.scale(),
            tau: self.kernel.tau(),
            p: self.multipliers.degree(),
        }
    }

    /// `sum_i coeffs[i] Phi_i(x)`, touching only kernels whose support
    /// contains `x`.
    pub fn evaluate_trial(&self, coeffs: &[f64], x: &Point) -> f64 {
        let centers = self.centers.points();
        let mut acc = 0.0;
        let mut terms: Vec<(usize, f64)> = Vec::new();
        self.center_index
            .for_each_within(x, self.kernel.scale(), |i, d| terms.push((i, d)));
        terms.sort_unstable_by_key(|t| t.0);
        for (i, d) in terms {
            debug_assert!((centers[i] - x).norm() == d);
            acc += coeffs[i] * self.kernel.eval_at_distance(d);
        }
        acc
    }

    /// Value and gradient of `sum_i coeffs[i] Phi_i` at `x`.
    pub fn evaluate_trial_with_grad(&self, coeffs: &[f64], x: &Point) -> (f64, crate::geometry::Vector) {
        let centers = self.centers.points();
        let mut ids: Vec<usize> = Vec::new();
        self.center_index
            .for_each_within(x, self.kernel.scale(), |i, _| ids.push(i));
        ids.sort_unstable();
        let mut value = 0.0;
        let mut grad = crate::geometry::Vector::zeros();
        for i in ids {
            let (v, g) = self.kernel.eval_and_grad(x, &centers[i]);
            value += coeffs[i] * v;
            grad += g * coeffs[i];
        }
        (value, grad)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::generate_grid_centers;

    #[test]
    fn hx_over_r_counts() {
        let sq = Polygon::unit_square();
        let expected = [(9, 2), (17, 5), (33, 9)];
        for (n, per_side) in expected {
            let c = generate_grid_centers(&sq, n).unwrap();
            let mesh = KRule::HxOverR.partition(&sq, c.fill_distance(), 0.2).unwrap();
            assert_eq!(mesh.elements_per_edge(), &[per_side; 4]);
            assert_eq!(mesh.mesh_size(), 1.0 / per_side as f64);
        }
        // clamped to one element per side
        assert_eq!(elements_for_length(1.0, 0.5, 0.1), 1);
    }

    #[test]
    fn auto_cells_align_with_grid() {
        let sq = Polygon::unit_square();
        let c = generate_grid_centers(&sq, 33).unwrap();
        let q = QuadratureSettings::default().domain_rule(&sq, &c, 0.2).unwrap();
        assert_eq!(q.grid_dims(), (96, 96));
        let q2 = QuadratureSettings::default()
            .refined(2)
            .domain_rule(&sq, &c, 0.2)
            .unwrap();
        assert_eq!(q2.grid_dims(), (192, 192));
        assert!(q.cell_size() <= 0.5 * c.fill_distance());
    }
}
