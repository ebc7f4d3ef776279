//! Direct solution of the saddle-point system and evaluation of the discrete
//! pair `(u_X, lambda_k)`.

use std::io::{BufRead, Write};
use std::sync::Arc;

use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::Mat;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sprs::CsMat;

use crate::assembly::{element_breakpoints, SaddleSystem};
use crate::discretization::Discretization;
use crate::error::{Error, Result};
use crate::geometry::{BoundaryMesh, BoundaryPoint, CenterSet, Point, Polygon, Vector, DEFAULT_PROBE_RESOLUTION};
use crate::kernels::WendlandKernel;
use crate::multiplier::{shifted_legendre, MultiplierSpace};
use crate::params::ParameterRecord;
use crate::quadrature::{DomainQuadrature, QuadRule1D};

/// Relative pivot threshold below which the system is reported singular.
pub const PIVOT_TOLERANCE: f64 = 1e-14;
/// Bound on the scaled block residual of an accepted solve.
pub const RESIDUAL_TOLERANCE: f64 = 1e-8;

/// Discrete solution: `u_X = sum u_i Phi_i` and the multiplier coefficients.
///
/// `lambda_coeffs` are the raw multiplier unknowns of the block system. With
/// the block system written as `A u + B l = F`, Green's formula makes the
/// multiplier approximate the *inward* flux, so the outward normal
/// derivative of `u` is `-l`; see [`MixedSolution::evaluate_normal_derivative`].
#[derive(Clone, Debug)]
pub struct MixedSolution {
    pub u_coeffs: Vec<f64>,
    pub lambda_coeffs: Vec<f64>,
    pub residual_norm: f64,
    pub condition_estimate: f64,
    pub params: ParameterRecord,
    disc: Arc<Discretization>,
}

/// Assembles the full `(N+M) x (N+M)` block matrix densely.
pub fn dense_block_matrix(a: &CsMat<f64>, b: &CsMat<f64>) -> Mat<f64> {
    let n = a.rows();
    let size = n + b.cols();
    let mut mat = Mat::<f64>::zeros(size, size);
    for (v, (i, j)) in a.iter() {
        mat[(i, j)] = *v;
    }
    for (v, (i, j)) in b.iter() {
        mat[(i, n + j)] = *v;
        mat[(n + j, i)] = *v;
    }
    mat
}

fn column(values: impl Iterator<Item = f64>, len: usize) -> Mat<f64> {
    let mut c = Mat::<f64>::zeros(len, 1);
    for (i, v) in values.take(len).enumerate() {
        c[(i, 0)] = v;
    }
    c
}

/// Hager/Higham estimate of `||M^-1||_1` from an LU factorization.
fn inverse_norm1_estimate(lu: &PartialPivLu<f64>, n: usize) -> f64 {
    let norm1 = |y: &Mat<f64>| (0..n).map(|i| y[(i, 0)].abs()).sum::<f64>();
    let mut x = column(std::iter::repeat(1.0 / n as f64), n);
    let mut est = 0.0;
    let mut last = usize::MAX;
    for _ in 0..5 {
        let y = lu.solve(&x);
        est = norm1(&y);
        let signs = column((0..n).map(|i| if y[(i, 0)] >= 0.0 { 1.0 } else { -1.0 }), n);
        let z = lu.solve_transpose(&signs);
        let (mut j, mut zmax) = (0, -1.0);
        for i in 0..n {
            if z[(i, 0)].abs() > zmax {
                zmax = z[(i, 0)].abs();
                j = i;
            }
        }
        let ztx: f64 = (0..n).map(|i| z[(i, 0)] * x[(i, 0)]).sum();
        if zmax <= ztx || j == last {
            break;
        }
        x = column((0..n).map(|i| if i == j { 1.0 } else { 0.0 }), n);
        last = j;
    }
    let denom = (n.max(2) - 1) as f64;
    let alt = column(
        (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 } * (1.0 + i as f64 / denom)),
        n,
    );
    let y = lu.solve(&alt);
    est.max(2.0 * norm1(&y) / (3.0 * n as f64))
}

/// `||[A u + B l - F; B^T u - G]||_2 / (||F||_2 + ||G||_2 + 1)`.
pub fn block_residual(a: &CsMat<f64>, b: &CsMat<f64>, f: &[f64], g: &[f64], u: &[f64], lambda: &[f64]) -> f64 {
    let mut top: Vec<f64> = f.iter().map(|v| -v).collect();
    let mut bottom: Vec<f64> = g.iter().map(|v| -v).collect();
    for (v, (i, j)) in a.iter() {
        top[i] += v * u[j];
    }
    for (v, (i, j)) in b.iter() {
        top[i] += v * lambda[j];
        bottom[j] += v * u[i];
    }
    let norm = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let res = (norm(&top).powi(2) + norm(&bottom).powi(2)).sqrt();
    res / (norm(f) + norm(g) + 1.0)
}

/// Coefficients of one block solve with its diagnostics.
#[derive(Clone, Debug)]
pub struct BlockSolution {
    pub u: Vec<f64>,
    pub lambda: Vec<f64>,
    pub residual_norm: f64,
    pub condition_estimate: f64,
}

/// Solves `[A B; B^T 0] (u, l) = (F, G)` by LU with partial pivoting.
/// `params` is attached to singular-system errors.
pub fn solve_blocks(
    a: &CsMat<f64>,
    b: &CsMat<f64>,
    f: &[f64],
    g: &[f64],
    params: &ParameterRecord,
) -> Result<BlockSolution> {
    let (n, m) = (a.rows(), b.cols());
    if n == 0 || m == 0 {
        return Err(Error::config(format!("need N >= 1 and M >= 1, got N = {n}, M = {m}")));
    }
    if a.cols() != n || b.rows() != n || f.len() != n || g.len() != m {
        return Err(Error::config("block dimensions do not match"));
    }
    let size = n + m;
    let mat = dense_block_matrix(a, b);
    let mut max_entry = 0.0f64;
    let mut norm1 = 0.0f64;
    for j in 0..size {
        let mut col = 0.0;
        for i in 0..size {
            let v = mat[(i, j)].abs();
            max_entry = max_entry.max(v);
            col += v;
        }
        norm1 = norm1.max(col);
    }
    let singular = |row: usize, pivot: f64| Error::Singular {
        row,
        pivot,
        params: Box::new(params.clone()),
    };
    if max_entry == 0.0 {
        return Err(singular(0, 0.0));
    }

    let lu = mat.partial_piv_lu();
    let upper = lu.U();
    let (mut row, mut pivot) = (0, f64::INFINITY);
    for i in 0..size {
        let v = upper[(i, i)].abs();
        if !(v >= pivot) {
            row = i;
            pivot = v;
        }
    }
    if !(pivot >= PIVOT_TOLERANCE * max_entry) {
        return Err(singular(row, pivot));
    }

    let rhs = column(f.iter().chain(g).copied(), size);
    let x = lu.solve(&rhs);
    let u_coeffs: Vec<f64> = (0..n).map(|i| x[(i, 0)]).collect();
    let lambda_coeffs: Vec<f64> = (n..size).map(|i| x[(i, 0)]).collect();
    if let Some(i) = (0..size).find(|&i| !x[(i, 0)].is_finite()) {
        return Err(Error::NonFinite {
            location: format!("solution component {i}"),
            value: x[(i, 0)],
        });
    }
    let residual_norm = block_residual(a, b, f, g, &u_coeffs, &lambda_coeffs);
    if !(residual_norm <= RESIDUAL_TOLERANCE) {
        return Err(Error::Conditioning {
            what: "saddle-point solve",
            detail: format!("scaled residual {residual_norm:.3e} exceeds {RESIDUAL_TOLERANCE:e}; {params}"),
        });
    }
    let condition_estimate = norm1 * inverse_norm1_estimate(&lu, size);
    Ok(BlockSolution {
        u: u_coeffs,
        lambda: lambda_coeffs,
        residual_norm,
        condition_estimate,
    })
}

/// Solves an assembled system.
pub fn solve(system: &SaddleSystem) -> Result<MixedSolution> {
    let sol = solve_blocks(&system.a, &system.b, &system.f, &system.g, &system.params)?;
    Ok(MixedSolution {
        u_coeffs: sol.u,
        lambda_coeffs: sol.lambda,
        residual_norm: sol.residual_norm,
        condition_estimate: sol.condition_estimate,
        params: system.params.clone(),
        disc: Arc::clone(system.discretization()),
    })
}

/// Largest scaled residuals of the two Galerkin equations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GalerkinResiduals {
    /// `max_i |a(u_X, Phi_i) + b(Phi_i, l) - F_i|`, scaled.
    pub orthogonality: f64,
    /// `max_j |b(u_X, mu_j) - G_j|`, scaled.
    pub constraint: f64,
}

impl MixedSolution {
    /// Wraps given coefficients without solving (residual fields are NaN).
    pub fn from_coefficients(
        disc: Arc<Discretization>,
        kappa: f64,
        u_coeffs: Vec<f64>,
        lambda_coeffs: Vec<f64>,
    ) -> Result<Self> {
        if u_coeffs.len() != disc.centers().len() || lambda_coeffs.len() != disc.multipliers().dim() {
            return Err(Error::config(format!(
                "coefficient lengths ({}, {}) do not match N = {}, M = {}",
                u_coeffs.len(),
                lambda_coeffs.len(),
                disc.centers().len(),
                disc.multipliers().dim()
            )));
        }
        Ok(MixedSolution {
            u_coeffs,
            lambda_coeffs,
            residual_norm: f64::NAN,
            condition_estimate: f64::NAN,
            params: disc.params(kappa),
            disc,
        })
    }

    pub fn discretization(&self) -> &Arc<Discretization> {
        &self.disc
    }

    pub fn evaluate_u(&self, x: &Point) -> f64 {
        self.disc.evaluate_trial(&self.u_coeffs, x)
    }

    pub fn evaluate_grad_u(&self, x: &Point) -> Vector {
        self.disc.evaluate_trial_with_grad(&self.u_coeffs, x).1
    }

    pub fn evaluate_u_with_grad(&self, x: &Point) -> (f64, Vector) {
        self.disc.evaluate_trial_with_grad(&self.u_coeffs, x)
    }

    /// `sum_j l_j mu_j(s)` at arc length `s`.
    pub fn evaluate_lambda(&self, s: f64) -> Result<f64> {
        self.disc.multipliers().evaluate(&self.lambda_coeffs, s)
    }

    pub fn evaluate_lambda_at(&self, bp: &BoundaryPoint) -> f64 {
        self.disc.multipliers().evaluate_at(&self.lambda_coeffs, bp)
    }

    /// Discrete outward normal derivative, `-sum_j l_j mu_j(s)`.
    pub fn evaluate_normal_derivative(&self, s: f64) -> Result<f64> {
        Ok(-self.evaluate_lambda(s)?)
    }

    pub fn evaluate_normal_derivative_at(&self, bp: &BoundaryPoint) -> f64 {
        -self.evaluate_lambda_at(bp)
    }

    /// Recomputes both Galerkin equations from point evaluations of `u_X`
    /// and the multiplier on the system's quadrature rules, without using the
    /// assembled matrices.
    pub fn galerkin_residuals(&self, system: &SaddleSystem) -> Result<GalerkinResiduals> {
        let disc = &self.disc;
        let n = disc.centers().len();
        let centers = disc.centers().points();
        let kernel = disc.kernel();
        let r = kernel.scale();
        let kappa = system.kappa;
        let quad = disc.domain_quadrature();

        let per_cell: Vec<Vec<(usize, f64)>> = quad
            .cells()
            .par_iter()
            .map(|cell| {
                let mut out = Vec::new();
                for node in cell.nodes.clone() {
                    let x = &quad.nodes()[node];
                    let w = quad.weights()[node];
                    let (u, gu) = self.evaluate_u_with_grad(x);
                    let mut ids = Vec::new();
                    disc.center_index().for_each_within(x, r, |i, _| ids.push(i));
                    ids.sort_unstable();
                    for i in ids {
                        let (v, gv) = kernel.eval_and_grad(x, &centers[i]);
                        out.push((i, w * (gu.dot(&gv) + kappa * u * v)));
                    }
                }
                out
            })
            .collect();
        let mut rows = vec![0.0; n];
        for cell in per_cell {
            for (i, v) in cell {
                rows[i] += v;
            }
        }

        let space = disc.multipliers();
        let mesh = space.mesh();
        let ld = space.local_dim();
        let rule = disc.boundary_rule();
        let mut cons = vec![0.0; space.dim()];
        for (e, element) in mesh.elements().iter().enumerate() {
            let len = element.length();
            let near = disc.center_index().within(&element.point_at(0.5), r + 0.5 * len);
            let breaks = element_breakpoints(element, near.iter().map(|&i| &centers[i]), r);
            for piece in breaks.windows(2) {
                let (a, b) = (piece[0], piece[1]);
                for (tau, w) in rule.iter() {
                    let bp = mesh.point_in_element(e, a + (b - a) * tau);
                    let ws = w * (b - a) * len;
                    let lam = self.evaluate_lambda_at(&bp);
                    let u = self.evaluate_u(&bp.point);
                    for &i in &near {
                        rows[i] += ws * kernel.eval(&bp.point, &centers[i]) * lam;
                    }
                    for q in 0..ld {
                        cons[e * ld + q] += ws * u * shifted_legendre(q, bp.t);
                    }
                }
            }
        }

        let norm = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let scale = norm(&system.f) + norm(&system.g) + 1.0;
        let max_dev =
            |vals: &[f64], data: &[f64]| vals.iter().zip(data).fold(0.0f64, |m, (v, d)| m.max((v - d).abs())) / scale;
        Ok(GalerkinResiduals {
            orthogonality: max_dev(&rows, &system.f),
            constraint: max_dev(&cons, &system.g),
        })
    }

    /// Writes a text dump: one `#`-prefixed JSON header line, then
    /// `center i x y`, `u i value` and `lambda j value` lines, all values at
    /// 17 significant digits.
    pub fn write_dump(&self, mut out: impl Write) -> Result<()> {
        let disc = &self.disc;
        let quad = disc.domain_quadrature();
        let header = DumpHeader {
            params: self.params.clone(),
            kernel: disc.kernel().smoothness().name().to_string(),
            polygon: disc.polygon().vertices().iter().map(|v| [v.x, v.y]).collect(),
            elements_per_edge: disc.multipliers().mesh().elements_per_edge().to_vec(),
            domain_cells: quad.grid_dims(),
            points_per_cell: quad.points_per_direction(),
            boundary_points: disc.boundary_rule().order(),
            residual_norm: Some(self.residual_norm).filter(|v| v.is_finite()),
            condition_estimate: Some(self.condition_estimate).filter(|v| v.is_finite()),
        };
        let json = serde_json::to_string(&header).map_err(|e| Error::config(e.to_string()))?;
        writeln!(out, "# {json}")?;
        for (i, c) in disc.centers().points().iter().enumerate() {
            writeln!(out, "center {i} {:.16e} {:.16e}", c.x, c.y)?;
        }
        for (i, v) in self.u_coeffs.iter().enumerate() {
            writeln!(out, "u {i} {v:.16e}")?;
        }
        for (j, v) in self.lambda_coeffs.iter().enumerate() {
            writeln!(out, "lambda {j} {v:.16e}")?;
        }
        Ok(())
    }

    /// Reads a dump written by [`MixedSolution::write_dump`] and rebuilds the
    /// spaces and quadrature rules it refers to.
    pub fn read_dump(input: impl BufRead) -> Result<Self> {
        let mut lines = input.lines();
        let first = lines.next().ok_or_else(|| Error::config("empty solution dump"))??;
        let json = first
            .strip_prefix("# ")
            .ok_or_else(|| Error::config("solution dump must start with a '# {...}' header"))?;
        let header: DumpHeader =
            serde_json::from_str(json).map_err(|e| Error::config(format!("bad dump header: {e}")))?;

        let (mut centers, mut u, mut lambda) = (Vec::new(), Vec::new(), Vec::new());
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            let bad = || Error::config(format!("bad dump line {}: {line:?}", lineno + 2));
            let mut fields = line.split_whitespace();
            let tag = fields.next().ok_or_else(bad)?;
            let index: usize = fields.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
            let values: Vec<f64> = fields
                .map(|s| s.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| bad())?;
            let expected = match tag {
                "center" => centers.len(),
                "u" => u.len(),
                "lambda" => lambda.len(),
                _ => return Err(bad()),
            };
            if index != expected || values.len() != if tag == "center" { 2 } else { 1 } {
                return Err(bad());
            }
            match tag {
                "center" => centers.push(Point::new(values[0], values[1])),
                "u" => u.push(values[0]),
                _ => lambda.push(values[0]),
            }
        }

        let polygon = Polygon::new(header.polygon.iter().map(|v| Point::new(v[0], v[1])).collect())?;
        let centers = CenterSet::from_points(centers, &polygon, DEFAULT_PROBE_RESOLUTION)?;
        let kernel = WendlandKernel::from_name(&header.kernel, header.params.r)?;
        let mesh = BoundaryMesh::with_counts(&polygon, header.elements_per_edge.clone())?;
        let multipliers = MultiplierSpace::new(mesh, header.params.p)?;
        let (nx, ny) = header.domain_cells;
        let domain_quad = DomainQuadrature::new(&polygon, nx, ny, header.points_per_cell)?;
        let boundary_rule = QuadRule1D::gauss_legendre(header.boundary_points)?;
        let disc = Arc::new(Discretization::from_parts(
            polygon,
            centers,
            kernel,
            multipliers,
            domain_quad,
            boundary_rule,
        ));
        let mut sol = MixedSolution::from_coefficients(disc, header.params.kappa, u, lambda)?;
        sol.residual_norm = header.residual_norm.unwrap_or(f64::NAN);
        sol.condition_estimate = header.condition_estimate.unwrap_or(f64::NAN);
        Ok(sol)
    }
}

#[derive(Serialize, Deserialize)]
struct DumpHeader {
    params: ParameterRecord,
    kernel: String,
    polygon: Vec<[f64; 2]>,
    elements_per_edge: Vec<usize>,
    domain_cells: (usize, usize),
    points_per_cell: usize,
    boundary_points: usize,
    residual_norm: Option<f64>,
    condition_estimate: Option<f64>,
}
