//! Error measurement against manufactured solutions, rate fitting, native
//! interpolation and the discrete inf-sup estimate.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use faer::linalg::solvers::Solve;
use faer::linalg::triangular_solve::solve_lower_triangular_in_place;
use faer::{Mat, MatRef, Par, Side};
use serde::{Deserialize, Serialize};
use sprs::CsMat;

use crate::assembly::{assemble_stiffness_mass, SaddleSystem};
use crate::discretization::{Discretization, QuadratureSettings};
use crate::error::{Error, Result};
use crate::geometry::{BoundaryMesh, BoundaryPoint, CenterSet, Point, Polygon, Vector};
use crate::kernels::WendlandKernel;
use crate::multiplier::MultiplierSpace;
use crate::neighbors::neighbor_pairs;
use crate::quadrature::{integrate_boundary, DomainQuadrature, QuadRule1D};
use crate::solver::MixedSolution;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExactKind {
    /// `u = x^2 + y^2`.
    Quadratic,
    /// `u = sin(pi x) sinh(pi y) / sinh(pi)`, harmonic.
    Trig,
}

impl ExactKind {
    pub const ALL: [ExactKind; 2] = [ExactKind::Quadratic, ExactKind::Trig];

    pub fn name(self) -> &'static str {
        match self {
            ExactKind::Quadratic => "quadratic",
            ExactKind::Trig => "trig",
        }
    }
}

impl FromStr for ExactKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExactKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::config(format!("unknown exact solution {s:?} (expected quadratic or trig)")))
    }
}

impl fmt::Display for ExactKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Manufactured solution of `-Lap u + kappa u = f`, `u = g` on the boundary.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExactSolution {
    pub kind: ExactKind,
    pub kappa: f64,
}

impl ExactSolution {
    pub fn new(kind: ExactKind, kappa: f64) -> Result<Self> {
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return Err(Error::config(format!(
                "kappa must be finite and nonnegative, got {kappa}"
            )));
        }
        Ok(ExactSolution { kind, kappa })
    }

    pub fn from_name(name: &str, kappa: f64) -> Result<Self> {
        Self::new(name.parse()?, kappa)
    }

    /// Regularity index `delta` of the solution.
    pub fn regularity(&self) -> f64 {
        2.0
    }

    pub fn u(&self, x: &Point) -> f64 {
        match self.kind {
            ExactKind::Quadratic => x.x * x.x + x.y * x.y,
            ExactKind::Trig => (PI * x.x).sin() * (PI * x.y).sinh() / PI.sinh(),
        }
    }

    pub fn grad_u(&self, x: &Point) -> Vector {
        match self.kind {
            ExactKind::Quadratic => Vector::new(2.0 * x.x, 2.0 * x.y),
            ExactKind::Trig => {
                let s = PI / PI.sinh();
                Vector::new(
                    s * (PI * x.x).cos() * (PI * x.y).sinh(),
                    s * (PI * x.x).sin() * (PI * x.y).cosh(),
                )
            }
        }
    }

    fn laplacian(&self, _x: &Point) -> f64 {
        match self.kind {
            ExactKind::Quadratic => 4.0,
            ExactKind::Trig => 0.0,
        }
    }

    pub fn f(&self, x: &Point) -> f64 {
        -self.laplacian(x) + self.kappa * self.u(x)
    }

    pub fn g(&self, bp: &BoundaryPoint) -> f64 {
        self.u(&bp.point)
    }

    /// Outward normal derivative at a boundary point.
    pub fn normal_derivative_at(&self, bp: &BoundaryPoint) -> f64 {
        self.grad_u(&bp.point).dot(&bp.normal)
    }

    /// Outward normal derivative at arc length `s` of a polygon.
    pub fn normal_derivative(&self, polygon: &Polygon, s: f64) -> Result<f64> {
        let (p, edge) = point_at_arc_length(polygon, s)?;
        Ok(self.grad_u(&p).dot(&polygon.outward_normal(edge)))
    }

    /// Largest deviation of `f`, `g` and the normal derivative from finite
    /// differences of `u` at the given interior points and boundary arc
    /// lengths.
    pub fn consistency_defect(&self, polygon: &Polygon, interior: &[Point], boundary: &[f64]) -> Result<f64> {
        let h = 2e-4;
        let mut worst = 0.0f64;
        for x in interior {
            let ex = Vector::new(h, 0.0);
            let ey = Vector::new(0.0, h);
            let lap = (self.u(&(x + ex)) + self.u(&(x - ex)) + self.u(&(x + ey)) + self.u(&(x - ey)) - 4.0 * self.u(x))
                / (h * h);
            worst = worst.max((self.f(x) - (-lap + self.kappa * self.u(x))).abs());
        }
        for &s in boundary {
            let (p, edge) = point_at_arc_length(polygon, s)?;
            let n = polygon.outward_normal(edge);
            let fd = (self.u(&(p + n * h)) - self.u(&(p - n * h))) / (2.0 * h);
            worst = worst.max((self.normal_derivative(polygon, s)? - fd).abs());
        }
        Ok(worst)
    }
}

fn point_at_arc_length(polygon: &Polygon, s: f64) -> Result<(Point, usize)> {
    let per = polygon.perimeter();
    if !(s >= 0.0 && s <= per) {
        return Err(Error::domain(format!("arc length {s} outside [0, {per}]")));
    }
    let mut start = 0.0;
    let last = polygon.num_edges() - 1;
    for e in 0..=last {
        let len = polygon.edge_length(e);
        if s < start + len || e == last {
            let (a, b) = polygon.edge(e);
            let t = ((s - start) / len).clamp(0.0, 1.0);
            return Ok((a + (b - a) * t, e));
        }
        start += len;
    }
    unreachable!()
}

/// `H^1` error of a function given by value and gradient.
pub fn h1_error_of(
    approx: impl Fn(&Point) -> (f64, Vector) + Sync,
    exact: &ExactSolution,
    quad: &DomainQuadrature,
) -> Result<f64> {
    let sq = quad.integrate_par(|x| {
        let (v, g) = approx(x);
        (exact.u(x) - v).powi(2) + (exact.grad_u(x) - g).norm_squared()
    })?;
    Ok(sq.max(0.0).sqrt())
}

/// `||u - u_X||_{H^1}` by quadrature.
pub fn h1_error(solution: &MixedSolution, exact: &ExactSolution, quad: &DomainQuadrature) -> Result<f64> {
    h1_error_of(|x| solution.evaluate_u_with_grad(x), exact, quad)
}

/// `L2(Gamma)` error of a boundary function against the exact flux.
pub fn l2_boundary_error_of(
    mesh: &BoundaryMesh,
    approx: impl Fn(&BoundaryPoint) -> f64,
    exact: &ExactSolution,
    rule: &QuadRule1D,
) -> Result<f64> {
    let sq = integrate_boundary(rule, mesh, |bp| (exact.normal_derivative_at(bp) - approx(bp)).powi(2))?;
    Ok(sq.max(0.0).sqrt())
}

/// `||du/dn - lambda_k||_{L2(Gamma)}`, with the discrete flux taken from
/// [`MixedSolution::evaluate_normal_derivative_at`].
pub fn l2_boundary_error(solution: &MixedSolution, exact: &ExactSolution, rule: &QuadRule1D) -> Result<f64> {
    let mesh = solution.discretization().multipliers().mesh();
    l2_boundary_error_of(mesh, |bp| solution.evaluate_normal_derivative_at(bp), exact, rule)
}

pub const DEFAULT_RATE_WINDOW: usize = 3;

/// Least-squares slope of `log(error)` against `log(parameter)` over the
/// last `window` entries.
pub fn fit_rate(parameters: &[f64], errors: &[f64], window: usize) -> Result<f64> {
    if parameters.len() != errors.len() {
        return Err(Error::config("parameter and error columns differ in length"));
    }
    if parameters.len() < 3 {
        return Err(Error::config(format!(
            "rate fitting needs at least 3 rows, got {}",
            parameters.len()
        )));
    }
    if window < 2 || window > parameters.len() {
        return Err(Error::config(format!(
            "rate window {window} outside 2..={}",
            parameters.len()
        )));
    }
    let tail = parameters.len() - window;
    let mut xs = Vec::with_capacity(window);
    let mut ys = Vec::with_capacity(window);
    for (&p, &e) in parameters[tail..].iter().zip(&errors[tail..]) {
        if !(e > 0.0) || !(p > 0.0) {
            return Err(Error::domain(format!(
                "rates need positive values, got parameter {p}, error {e}"
            )));
        }
        xs.push(p.ln());
        ys.push(e.ln());
    }
    let n = window as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::domain("rate fitting needs distinct parameter values"));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}

/// One solve of a convergence sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    #[serde(rename = "N")]
    pub n_centers: usize,
    #[serde(rename = "M")]
    pub n_multipliers: usize,
    #[serde(rename = "h_X")]
    pub fill_distance: f64,
    pub k: f64,
    pub r: f64,
    pub tau: f64,
    pub p: usize,
    pub h1_error: f64,
    pub l2_lambda_error: f64,
    pub cond_estimate: f64,
    pub runtime_s: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorColumn {
    H1,
    L2Lambda,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RateParameter {
    FillDistance,
    K,
}

pub const CSV_HEADER: &str = "N,M,h_X,k,r,tau,p,h1_error,l2_lambda_error,cond_estimate,runtime_s";

/// Sweep rows kept sorted by `h_X` descending.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConvergenceRecord {
    rows: Vec<ConvergenceRow>,
}

impl ConvergenceRecord {
    pub fn new(rows: Vec<ConvergenceRow>) -> Self {
        let mut rec = ConvergenceRecord::default();
        for row in rows {
            rec.push(row);
        }
        rec
    }

    /// Inserts a row, keeping the order (stable for equal `h_X`).
    pub fn push(&mut self, row: ConvergenceRow) {
        let at = self.rows.partition_point(|r| r.fill_distance >= row.fill_distance);
        self.rows.insert(at, row);
    }

    pub fn rows(&self) -> &[ConvergenceRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, column: ErrorColumn) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| match column {
                ErrorColumn::H1 => r.h1_error,
                ErrorColumn::L2Lambda => r.l2_lambda_error,
            })
            .collect()
    }

    pub fn parameter(&self, parameter: RateParameter) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| match parameter {
                RateParameter::FillDistance => r.fill_distance,
                RateParameter::K => r.k,
            })
            .collect()
    }

    pub fn fit_rate(&self, column: ErrorColumn, parameter: RateParameter, window: usize) -> Result<f64> {
        fit_rate(&self.parameter(parameter), &self.column(column), window)
    }

    /// Rate over the default window, or `None` below 3 rows.
    pub fn rate(&self, column: ErrorColumn, parameter: RateParameter) -> Result<Option<f64>> {
        if self.rows.len() < 3 {
            return Ok(None);
        }
        self.fit_rate(column, parameter, DEFAULT_RATE_WINDOW).map(Some)
    }

    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{:.16e},{:.16e},{:.16e},{:.16e},{},{:.16e},{:.16e},{:.16e},{:.6}",
                r.n_centers,
                r.n_multipliers,
                r.fill_distance,
                r.k,
                r.r,
                r.tau,
                r.p,
                r.h1_error,
                r.l2_lambda_error,
                r.cond_estimate,
                r.runtime_s
            )?;
        }
        Ok(())
    }
}

/// Dense kernel matrix `K_ij = Phi_r(x_i - x_j)`.
pub fn kernel_matrix(points: &[Point], kernel: &WendlandKernel) -> Mat<f64> {
    let n = points.len();
    let mut k = Mat::<f64>::zeros(n, n);
    for (i, j) in neighbor_pairs(points, kernel.scale()) {
        let v = kernel.eval(&points[i], &points[j]);
        k[(i, j)] = v;
        k[(j, i)] = v;
    }
    k
}

/// Coefficients of the kernel interpolant of `v` on the centers.
pub fn interpolate_native(v: impl Fn(&Point) -> f64, centers: &CenterSet, kernel: &WendlandKernel) -> Result<Vec<f64>> {
    let pts = centers.points();
    let n = pts.len();
    let values: Vec<f64> = pts.iter().map(&v).collect();
    let ill = |detail: String| Error::Conditioning {
        what: "kernel interpolation matrix",
        detail: format!("{detail}; q_X / r = {:.3e}", centers.separation() / kernel.scale()),
    };
    let k = kernel_matrix(pts, kernel);
    let llt = k.llt(Side::Lower).map_err(|e| ill(format!("Cholesky failed ({e})")))?;
    let mut rhs = Mat::<f64>::zeros(n, 1);
    for (i, val) in values.iter().enumerate() {
        rhs[(i, 0)] = *val;
    }
    let sol = llt.solve(&rhs);
    let coeffs: Vec<f64> = (0..n).map(|i| sol[(i, 0)]).collect();
    let scale = values.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let residual = interpolation_residual(pts, kernel, &coeffs, &values);
    if !(residual <= 1e-10 * scale.max(f64::MIN_POSITIVE)) && scale > 0.0 {
        return Err(ill(format!("interpolation residual {residual:.3e}")));
    }
    Ok(coeffs)
}

/// `max_i |sum_j c_j Phi_r(x_i - x_j) - v_i|`.
pub fn interpolation_residual(points: &[Point], kernel: &WendlandKernel, coeffs: &[f64], values: &[f64]) -> f64 {
    let mut kc = vec![0.0; points.len()];
    for (i, j) in neighbor_pairs(points, kernel.scale()) {
        let v = kernel.eval(&points[i], &points[j]);
        kc[i] += v * coeffs[j];
        if i != j {
            kc[j] += v * coeffs[i];
        }
    }
    kc.iter().zip(values).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InterpolationRow {
    pub n_centers: usize,
    pub fill_distance: f64,
    pub separation: f64,
    pub l2_error: f64,
    pub max_center_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InterpolationStudy {
    pub kernel: String,
    pub r: f64,
    pub rows: Vec<InterpolationRow>,
    /// `L2` rate against `h_X`; `None` below 3 rows.
    pub rate: Option<f64>,
    /// False when every error sits at the quadrature floor, so the fitted
    /// rate carries no information.
    pub rate_meaningful: bool,
}

/// Errors below this fraction of `max |v|` count as exact reproduction.
pub const INTERPOLATION_FLOOR: f64 = 1e-10;

/// Interpolates `v` on each center set in turn and measures the `L2` error on
/// the rule given by `quad`.
pub fn interpolation_rate_study(
    v: impl Fn(&Point) -> f64 + Sync,
    polygon: &Polygon,
    center_sets: &[CenterSet],
    kernel: &WendlandKernel,
    quad: &QuadratureSettings,
) -> Result<InterpolationStudy> {
    let mut rows = Vec::with_capacity(center_sets.len());
    let mut vmax = 0.0f64;
    for (i, centers) in center_sets.iter().enumerate() {
        if i > 0 && !(centers.fill_distance() < center_sets[i - 1].fill_distance()) {
            return Err(Error::config(
                "interpolation study needs strictly decreasing fill distances",
            ));
        }
        let coeffs = interpolate_native(&v, centers, kernel)?;
        let values: Vec<f64> = centers.points().iter().map(&v).collect();
        vmax = values.iter().fold(vmax, |m, x| m.max(x.abs()));
        let residual = interpolation_residual(centers.points(), kernel, &coeffs, &values);
        let rule = quad.domain_rule(polygon, centers, kernel.scale())?;
        let index = crate::neighbors::PointIndex::new(centers.points(), kernel.scale());
        let sq = rule.integrate_par(|x| {
            let mut s = 0.0;
            let mut ids = Vec::new();
            index.for_each_within(x, kernel.scale(), |j, _| ids.push(j));
            ids.sort_unstable();
            for j in ids {
                s += coeffs[j] * kernel.eval(x, &centers.points()[j]);
            }
            (v(x) - s).powi(2)
        })?;
        rows.push(InterpolationRow {
            n_centers: centers.len(),
            fill_distance: centers.fill_distance(),
            separation: centers.separation(),
            l2_error: sq.max(0.0).sqrt(),
            max_center_residual: residual,
        });
    }
    let rate_meaningful = rows.iter().any(|r| r.l2_error > INTERPOLATION_FLOOR * vmax.max(1.0));
    let rate = if rows.len() >= 3 && rows.iter().all(|r| r.l2_error > 0.0) {
        let h: Vec<f64> = rows.iter().map(|r| r.fill_distance).collect();
        let e: Vec<f64> = rows.iter().map(|r| r.l2_error).collect();
        Some(fit_rate(&h, &e, DEFAULT_RATE_WINDOW)?)
    } else {
        None
    };
    Ok(InterpolationStudy {
        kernel: kernel.smoothness().name().to_string(),
        r: kernel.scale(),
        rows,
        rate,
        rate_meaningful,
    })
}

fn to_dense(m: &CsMat<f64>) -> Mat<f64> {
    let mut d = Mat::<f64>::zeros(m.rows(), m.cols());
    for (v, (i, j)) in m.iter() {
        d[(i, j)] = *v;
    }
    d
}

/// `beta = min_mu max_v v^T B mu / (|v|_G1 |mu|_W)`, the square root of the
/// smallest eigenvalue of `B^T G1^-1 B` relative to `W`.
pub fn infsup_constant(b: MatRef<'_, f64>, g1: MatRef<'_, f64>, w: MatRef<'_, f64>) -> Result<f64> {
    let (n, m) = (b.nrows(), b.ncols());
    if g1.nrows() != n || g1.ncols() != n || w.nrows() != m || w.ncols() != m {
        return Err(Error::config("inf-sup matrices have inconsistent shapes"));
    }
    let singular = |which: &str| Error::Conditioning {
        what: "Gram matrix",
        detail: format!("{which} is not positive definite"),
    };
    let g1_llt = g1.llt(Side::Lower).map_err(|_| singular("trial-space Gram"))?;
    let w_llt = w.llt(Side::Lower).map_err(|_| singular("multiplier Gram"))?;
    if b.col_iter().all(|c| c.iter().all(|v| *v == 0.0)) {
        return Ok(0.0);
    }
    let schur = b.transpose() * g1_llt.solve(b);
    // L^-1 S L^-T with W = L L^T
    let mut y = schur;
    solve_lower_triangular_in_place(w_llt.L(), y.as_mut(), Par::Seq);
    let mut t = y.transpose().to_owned();
    solve_lower_triangular_in_place(w_llt.L(), t.as_mut(), Par::Seq);
    let sym = Mat::<f64>::from_fn(m, m, |i, j| 0.5 * (t[(i, j)] + t[(j, i)]));
    let eig = sym
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Conditioning {
            what: "inf-sup eigenproblem",
            detail: format!("{e:?}"),
        })?;
    Ok(eig[0].max(0.0).sqrt())
}

/// Diagonal `L2(Gamma)` Gram matrix of the multiplier basis.
pub fn boundary_l2_gram(space: &MultiplierSpace) -> CsMat<f64> {
    let d = space.l2_gram_diagonal();
    let m = d.len();
    CsMat::new((m, m), (0..=m).collect(), (0..m).collect(), d)
}

/// `H^1` Gram matrix of the trial space on the discretization's rule.
pub fn h1_gram(disc: &Discretization) -> Result<CsMat<f64>> {
    Ok(assemble_stiffness_mass(disc.centers().points(), disc.kernel(), disc.domain_quadrature())?.combine(1.0))
}

/// Inf-sup estimate with `W = k * boundary_l2_gram` as the `H^-1/2` surrogate.
pub fn estimate_infsup(system: &SaddleSystem, h1_gram: &CsMat<f64>, boundary_l2_gram: &CsMat<f64>) -> Result<f64> {
    let k = system.params.k;
    let w = to_dense(boundary_l2_gram) * faer::Scale(k);
    infsup_constant(to_dense(&system.b).as_ref(), to_dense(h1_gram).as_ref(), w.as_ref())
}
