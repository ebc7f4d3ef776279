//! Gauss-Legendre rules on boundary elements and tensor rules on a cell
//! subdivision of the domain.

use rayon::prelude::*;

use crate::error::{check_finite, Error, Result};
use crate::geometry::{BoundaryMesh, BoundaryPoint, Point, Polygon};

/// Gauss-Legendre rule on the reference interval `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadRule1D {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadRule1D {
    /// `order`-point rule, exact for polynomials of degree `2 * order - 1`.
    pub fn gauss_legendre(order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::config("quadrature order must be positive"));
        }
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        // Roots of P_n on [-1, 1] by Newton iteration from Chebyshev guesses;
        // the rule is symmetric so only half the roots are computed.
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            // map to [0, 1]
            nodes[i] = 0.5 * (1.0 - x);
            nodes[n - 1 - i] = 0.5 * (1.0 + x);
            weights[i] = 0.5 * w;
            weights[n - 1 - i] = 0.5 * w;
        }
        Ok(QuadRule1D { nodes, weights })
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    /// Integral of `f` over `[a, b]`.
    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        let h = b - a;
        self.iter().map(|(t, w)| w * f(a + h * t)).sum::<f64>() * h
    }
}

/// Legendre polynomial `P_n(x)` and its derivative.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Axis-aligned quadrature cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub min: Point,
    pub max: Point,
}

impl Rect {
    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn center(&self) -> Point {
        Point::new(0.5 * (self.min.x + self.max.x), 0.5 * (self.min.y + self.max.y))
    }

    pub fn half_diagonal(&self) -> f64 {
        0.5 * self.width().hypot(self.height())
    }

    fn quarters(&self) -> [Rect; 4] {
        let c = self.center();
        [
            Rect { min: self.min, max: c },
            Rect {
                min: Point::new(c.x, self.min.y),
                max: Point::new(self.max.x, c.y),
            },
            Rect {
                min: Point::new(self.min.x, c.y),
                max: Point::new(c.x, self.max.y),
            },
            Rect { min: c, max: self.max },
        ]
    }

    fn distance_to(&self, p: &Point) -> f64 {
        let dx = (self.min.x - p.x).max(0.0).max(p.x - self.max.x);
        let dy = (self.min.y - p.y).max(0.0).max(p.y - self.max.y);
        dx.hypot(dy)
    }

    fn contains_strictly(&self, p: &Point) -> bool {
        p.x > self.min.x && p.x < self.max.x && p.y > self.min.y && p.y < self.max.y
    }

    /// Whether segment `a-b` passes through the open interior.
    fn crossed_by(&self, a: &Point, b: &Point) -> bool {
        // Liang-Barsky clip, then test the midpoint of the clipped piece.
        let d = b - a;
        let (mut t0, mut t1) = (0.0f64, 1.0f64);
        for (p, q) in [
            (-d.x, a.x - self.min.x),
            (d.x, self.max.x - a.x),
            (-d.y, a.y - self.min.y),
            (d.y, self.max.y - a.y),
        ] {
            if p == 0.0 {
                if q < 0.0 {
                    return false;
                }
            } else {
                let t = q / p;
                if p < 0.0 {
                    t0 = t0.max(t);
                } else {
                    t1 = t1.min(t);
                }
            }
        }
        if t0 >= t1 {
            return false;
        }
        self.contains_strictly(&(a + d * (0.5 * (t0 + t1))))
    }
}

/// A cell of the domain rule and the range of its nodes.
#[derive(Clone, Debug)]
pub struct QuadCell {
    pub rect: Rect,
    pub nodes: std::ops::Range<usize>,
}

/// Tensor Gauss rule on a cell grid clipped to a polygon.
#[derive(Clone, Debug)]
pub struct DomainQuadrature {
    cells: Vec<QuadCell>,
    nodes: Vec<Point>,
    weights: Vec<f64>,
    origin: Point,
    cell_width: f64,
    cell_height: f64,
    nx: usize,
    ny: usize,
    // top-level grid slot -> cells (subcells of straddling slots included)
    slot_starts: Vec<usize>,
    slot_cells: Vec<usize>,
    points_per_direction: usize,
}

const SUBDIVISION_LEVELS: u32 = 3;

impl DomainQuadrature {
    /// `nx * ny` cell grid over the bounding box with `points` Gauss points
    /// per direction and cell. Cells crossed by the boundary are subdivided
    /// three times and the leaves kept when their midpoint is inside.
    pub fn new(polygon: &Polygon, nx: usize, ny: usize, points: usize) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::config("quadrature needs at least one cell per direction"));
        }
        let rule = QuadRule1D::gauss_legendre(points)?;
        let (min, max) = polygon.bounding_box();
        let cw = (max.x - min.x) / nx as f64;
        let chh = (max.y - min.y) / ny as f64;

        let slot_rect = |ix: usize, iy: usize| Rect {
            min: Point::new(min.x + ix as f64 * cw, min.y + iy as f64 * chh),
            max: Point::new(
                if ix + 1 == nx {
                    max.x
                } else {
                    min.x + (ix + 1) as f64 * cw
                },
                if iy + 1 == ny {
                    max.y
                } else {
                    min.y + (iy + 1) as f64 * chh
                },
            ),
        };

        let slots: Vec<Vec<Rect>> = (0..nx * ny)
            .into_par_iter()
            .map(|s| {
                let mut out = Vec::new();
                classify(polygon, slot_rect(s % nx, s / nx), 0, &mut out);
                out
            })
            .collect();

        let mut cells = Vec::new();
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        let mut slot_starts = Vec::with_capacity(nx * ny + 1);
        let mut slot_cells = Vec::new();
        for rects in slots {
            slot_starts.push(slot_cells.len());
            for rect in rects {
                let start = nodes.len();
                let (w, h) = (rect.width(), rect.height());
                for (tx, wx) in rule.iter() {
                    for (ty, wy) in rule.iter() {
                        nodes.push(Point::new(rect.min.x + w * tx, rect.min.y + h * ty));
                        weights.push(wx * wy * w * h);
                    }
                }
                slot_cells.push(cells.len());
                cells.push(QuadCell {
                    rect,
                    nodes: start..nodes.len(),
                });
            }
        }
        slot_starts.push(slot_cells.len());

        Ok(DomainQuadrature {
            cells,
            nodes,
            weights,
            origin: min,
            cell_width: cw,
            cell_height: chh,
            nx,
            ny,
            slot_starts,
            slot_cells,
            points_per_direction: points,
        })
    }

    /// Square-ish cells of size at most `cell_size`.
    pub fn with_cell_size(polygon: &Polygon, cell_size: f64, points: usize) -> Result<Self> {
        if !(cell_size > 0.0) {
            return Err(Error::config(format!("cell size must be positive, got {cell_size}")));
        }
        let (min, max) = polygon.bounding_box();
        let nx = ((max.x - min.x) / cell_size * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        let ny = ((max.y - min.y) / cell_size * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        Self::new(polygon, nx, ny, points)
    }

    pub fn cells(&self) -> &[QuadCell] {
        &self.cells
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn points_per_direction(&self) -> usize {
        self.points_per_direction
    }

    /// Size of the top-level cells.
    pub fn cell_size(&self) -> f64 {
        self.cell_width.max(self.cell_height)
    }

    pub fn grid_dims(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    /// Cells whose rectangle comes within `radius` of `center`, ascending.
    pub fn cells_near(&self, center: &Point, radius: f64) -> Vec<usize> {
        let span = |lo: f64, hi: f64, origin: f64, h: f64, n: usize| -> Option<(usize, usize)> {
            let a = ((lo - origin) / h).floor();
            let b = ((hi - origin) / h).floor();
            if b < 0.0 || a > (n - 1) as f64 {
                None
            } else {
                Some((a.max(0.0) as usize, (b as usize).min(n - 1)))
            }
        };
        let mut out = Vec::new();
        let Some((x0, x1)) = span(
            center.x - radius,
            center.x + radius,
            self.origin.x,
            self.cell_width,
            self.nx,
        ) else {
            return out;
        };
        let Some((y0, y1)) = span(
            center.y - radius,
            center.y + radius,
            self.origin.y,
            self.cell_height,
            self.ny,
        ) else {
            return out;
        };
        for iy in y0..=y1 {
            for ix in x0..=x1 {
                let s = iy * self.nx + ix;
                for &c in &self.slot_cells[self.slot_starts[s]..self.slot_starts[s + 1]] {
                    if self.cells[c].rect.distance_to(center) <= radius {
                        out.push(c);
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Indices of all nodes within distance `radius` of `center`, ascending.
    pub fn restrict_support(&self, center: &Point, radius: f64) -> Vec<usize> {
        let mut out = Vec::new();
        for c in self.cells_near(center, radius) {
            for i in self.cells[c].nodes.clone() {
                if (self.nodes[i] - center).norm() <= radius {
                    out.push(i);
                }
            }
        }
        out
    }

    /// Weighted node sum of `f`, accumulated cell by cell in a fixed order.
    pub fn integrate_domain(&self, f: impl Fn(&Point) -> f64 + Sync) -> Result<f64> {
        self.integrate_nodes(0..self.nodes.len(), f)
    }

    /// Weighted sum over a subset of nodes, in the given order.
    pub fn integrate_nodes(&self, nodes: impl IntoIterator<Item = usize>, f: impl Fn(&Point) -> f64) -> Result<f64> {
        let mut acc = 0.0;
        for i in nodes {
            let p = &self.nodes[i];
            let v = check_finite(f(p), || format!("domain node ({}, {})", p.x, p.y))?;
            acc += self.weights[i] * v;
        }
        Ok(acc)
    }

    /// Per-cell sums evaluated in parallel, then added in cell order.
    pub fn integrate_par(&self, f: impl Fn(&Point) -> f64 + Sync) -> Result<f64> {
        let partial: Vec<Result<f64>> = self
            .cells
            .par_iter()
            .map(|cell| self.integrate_nodes(cell.nodes.clone(), &f))
            .collect();
        let mut acc = 0.0;
        for p in partial {
            acc += p?;
        }
        Ok(acc)
    }
}

fn classify(polygon: &Polygon, rect: Rect, level: u32, out: &mut Vec<Rect>) {
    let n = polygon.num_edges();
    let crossed = (0..n).any(|i| {
        let (a, b) = polygon.edge(i);
        rect.crossed_by(&a, &b)
    }) || polygon.vertices().iter().any(|v| rect.contains_strictly(v));
    if !crossed || level == SUBDIVISION_LEVELS {
        if polygon.contains(&rect.center()) {
            out.push(rect);
        }
        return;
    }
    for q in rect.quarters() {
        classify(polygon, q, level + 1, out);
    }
}

/// Sum over all boundary elements of the per-element Gauss sums of `f`.
pub fn integrate_boundary(rule: &QuadRule1D, mesh: &BoundaryMesh, f: impl Fn(&BoundaryPoint) -> f64) -> Result<f64> {
    let mut acc = 0.0;
    for (e, element) in mesh.elements().iter().enumerate() {
        acc += integrate_element(rule, mesh, e, &f)? * element.length();
    }
    Ok(acc)
}

/// Reference-interval Gauss sum on one element; multiply by its length for
/// the arc-length integral.
pub fn integrate_element(
    rule: &QuadRule1D,
    mesh: &BoundaryMesh,
    element: usize,
    f: impl Fn(&BoundaryPoint) -> f64,
) -> Result<f64> {
    let mut acc = 0.0;
    for (t, w) in rule.iter() {
        let bp = mesh.point_in_element(element, t);
        let v = check_finite(f(&bp), || format!("boundary arc length {}", bp.s))?;
        acc += w * v;
    }
    Ok(acc)
}
