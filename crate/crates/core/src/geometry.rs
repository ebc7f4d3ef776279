//! Polygonal domains, center sets and boundary partitions.

use nalgebra::{Point2, Vector2};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::neighbors::PointIndex;

pub type Point = Point2<f64>;
pub type Vector = Vector2<f64>;

/// Absolute tolerance of the closed point-in-polygon test.
pub const CONTAINS_TOL: f64 = 1e-12;

/// Probe points per unit length used for fill-distance estimates.
pub const DEFAULT_PROBE_RESOLUTION: usize = 512;

/// Simple polygon with counter-clockwise vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct Polygon {
    vertices: Vec<Point>,
}

impl Polygon {
    pub fn new(vertices: Vec<Point>) -> Result<Self> {
        let n = vertices.len();
        if n < 3 {
            return Err(Error::config(format!("polygon needs at least 3 vertices, got {n}")));
        }
        for i in 0..n {
            let (a, b) = (vertices[i], vertices[(i + 1) % n]);
            if (b - a).norm() == 0.0 {
                return Err(Error::config(format!(
                    "polygon vertices {i} and {} coincide",
                    (i + 1) % n
                )));
            }
        }
        let poly = Polygon { vertices };
        if poly.signed_area() <= 0.0 {
            return Err(Error::config("polygon must be counter-clockwise with positive area"));
        }
        for i in 0..n {
            for j in i + 1..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if adjacent {
                    continue;
                }
                let (a, b) = poly.edge(i);
                let (c, d) = poly.edge(j);
                if segments_intersect(&a, &b, &c, &d) {
                    return Err(Error::config(format!("polygon edges {i} and {j} intersect")));
                }
            }
        }
        Ok(poly)
    }

    pub fn unit_square() -> Self {
        Polygon {
            vertices: vec![
                Point::new(0.0, 0.0),
                Point::new(1.0, 0.0),
                Point::new(1.0, 1.0),
                Point::new(0.0, 1.0),
            ],
        }
    }

    /// Unit square with the upper-right quarter removed.
    pub fn l_shape() -> Self {
        Polygon {
            vertices: vec![
                Point::new(0.0, 0.0),
                Point::new(1.0, 0.0),
                Point::new(1.0, 0.5),
                Point::new(0.5, 0.5),
                Point::new(0.5, 1.0),
                Point::new(0.0, 1.0),
            ],
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "unit_square" => Ok(Self::unit_square()),
            "l_shape" => Ok(Self::l_shape()),
            other => Err(Error::config(format!("unknown polygon preset '{other}'"))),
        }
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn num_edges(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge(&self, i: usize) -> (Point, Point) {
        let n = self.vertices.len();
        (self.vertices[i], self.vertices[(i + 1) % n])
    }

    pub fn edge_length(&self, i: usize) -> f64 {
        let (a, b) = self.edge(i);
        (b - a).norm()
    }

    /// Outward unit normal of edge `i` (right-hand side of a CCW traversal).
    pub fn outward_normal(&self, i: usize) -> Vector {
        let (a, b) = self.edge(i);
        let t = (b - a).normalize();
        Vector::new(t.y, -t.x)
    }

    pub fn perimeter(&self) -> f64 {
        (0..self.num_edges()).map(|i| self.edge_length(i)).sum()
    }

    pub fn signed_area(&self) -> f64 {
        let n = self.vertices.len();
        let mut acc = 0.0;
        for i in 0..n {
            let (a, b) = (self.vertices[i], self.vertices[(i + 1) % n]);
            acc += a.x * b.y - b.x * a.y;
        }
        0.5 * acc
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        let mut min = self.vertices[0];
        let mut max = self.vertices[0];
        for v in &self.vertices {
            min.x = min.x.min(v.x);
            min.y = min.y.min(v.y);
            max.x = max.x.max(v.x);
            max.y = max.y.max(v.y);
        }
        (min, max)
    }

    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for a in &self.vertices {
            for b in &self.vertices {
                d = d.max((a - b).norm());
            }
        }
        d
    }

    pub fn is_unit_square(&self) -> bool {
        *self == Self::unit_square()
    }

    pub fn distance_to_boundary(&self, p: &Point) -> f64 {
        (0..self.num_edges())
            .map(|i| {
                let (a, b) = self.edge(i);
                point_segment_distance(p, &a, &b)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Closed point-in-polygon test: boundary points (within
    /// [`CONTAINS_TOL`]) count as inside.
    pub fn contains(&self, p: &Point) -> bool {
        if self.distance_to_boundary(p) <= CONTAINS_TOL {
            return true;
        }
        let n = self.vertices.len();
        let mut inside = false;
        for i in 0..n {
            let (a, b) = self.edge(i);
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
                if p.x < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Strict interior test (boundary points excluded).
    pub fn contains_strictly(&self, p: &Point) -> bool {
        self.distance_to_boundary(p) > CONTAINS_TOL && self.contains(p)
    }
}

fn cross(a: &Vector, b: &Vector) -> f64 {
    a.x * b.y - a.y * b.x
}

pub(crate) fn point_segment_distance(p: &Point, a: &Point, b: &Point) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    let t = if len2 == 0.0 {
        0.0
    } else {
        ((p - a).dot(&ab) / len2).clamp(0.0, 1.0)
    };
    (p - (a + ab * t)).norm()
}

fn segments_intersect(a: &Point, b: &Point, c: &Point, d: &Point) -> bool {
    let d1 = cross(&(b - a), &(c - a));
    let d2 = cross(&(b - a), &(d - a));
    let d3 = cross(&(d - c), &(a - c));
    let d4 = cross(&(d - c), &(b - c));
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    let on = |p: &Point, q: &Point, r: &Point| point_segment_distance(r, p, q) <= CONTAINS_TOL;
    on(a, b, c) || on(a, b, d) || on(c, d, a) || on(c, d, b)
}

/// Center set `X` with its fill distance `h_X` and separation `q_X`.
#[derive(Clone, Debug)]
pub struct CenterSet {
    points: Vec<Point>,
    fill_distance: f64,
    separation: f64,
    grid_intervals: Option<usize>,
}

impl CenterSet {
    /// Wraps arbitrary points. Every point must lie in the closed polygon and
    /// points must be pairwise distinct.
    pub fn from_points(points: Vec<Point>, polygon: &Polygon, probe_resolution: usize) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::config("center set is empty"));
        }
        if let Some(p) = points.iter().find(|p| !polygon.contains(p)) {
            return Err(Error::config(format!(
                "center ({}, {}) lies outside the polygon",
                p.x, p.y
            )));
        }
        let separation = separation_distance(&points);
        if separation == 0.0 {
            return Err(Error::config("center set contains duplicate points"));
        }
        let fill_distance = fill_distance(&points, polygon, probe_resolution)?;
        Ok(CenterSet {
            points,
            fill_distance,
            separation,
            grid_intervals: None,
        })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `h_X`, estimated on a probe grid.
    pub fn fill_distance(&self) -> f64 {
        self.fill_distance
    }

    /// `q_X`; infinite for a single center.
    pub fn separation(&self) -> f64 {
        self.separation
    }

    /// Intervals per side when the set is a tensor grid on the unit square.
    pub fn grid_intervals(&self) -> Option<usize> {
        self.grid_intervals
    }
}

/// Half the minimal pairwise distance.
pub fn separation_distance(points: &[Point]) -> f64 {
    if points.len() < 2 {
        return f64::INFINITY;
    }
    let mut min = f64::INFINITY;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            min = min.min((a - b).norm());
        }
    }
    0.5 * min
}

/// `n_per_side`² tensor grid on the closed unit square, boundary included.
pub fn generate_grid_centers(polygon: &Polygon, n_per_side: usize) -> Result<CenterSet> {
    if !polygon.is_unit_square() {
        return Err(Error::config(
            "tensor grids are only defined for the unit square; use generate_interior_centers",
        ));
    }
    if n_per_side < 2 {
        return Err(Error::config(format!("n_per_side must be >= 2, got {n_per_side}")));
    }
    let m = (n_per_side - 1) as f64;
    let points = (0..n_per_side)
        .flat_map(|i| (0..n_per_side).map(move |j| Point::new(i as f64 / m, j as f64 / m)))
        .collect();
    let mut set = CenterSet::from_points(points, polygon, DEFAULT_PROBE_RESOLUTION)?;
    set.grid_intervals = Some(n_per_side - 1);
    Ok(set)
}

/// Axis-aligned grid of the given spacing, anchored at the lower-left corner
/// of the bounding box and clipped to the closed polygon.
pub fn generate_interior_centers(polygon: &Polygon, target_spacing: f64) -> Result<CenterSet> {
    if !(target_spacing > 0.0) || target_spacing >= polygon.diameter() {
        return Err(Error::config(format!(
            "spacing {target_spacing} must be positive and below the polygon diameter {}",
            polygon.diameter()
        )));
    }
    let (min, max) = polygon.bounding_box();
    let nx = ((max.x - min.x) / target_spacing + 1e-9).floor() as usize;
    let ny = ((max.y - min.y) / target_spacing + 1e-9).floor() as usize;
    let mut points = Vec::new();
    for i in 0..=nx {
        for j in 0..=ny {
            let p = Point::new(min.x + i as f64 * target_spacing, min.y + j as f64 * target_spacing);
            if polygon.contains(&p) {
                points.push(p);
            }
        }
    }
    if points.is_empty() {
        return Err(Error::config(format!(
            "spacing {target_spacing} leaves no center in the polygon"
        )));
    }
    CenterSet::from_points(points, polygon, DEFAULT_PROBE_RESOLUTION)
}

/// `n_per_side` nodes along the longer bounding-box side: the tensor grid on
/// the unit square, the clipped grid of the same spacing elsewhere.
pub fn centers_per_side(polygon: &Polygon, n_per_side: usize) -> Result<CenterSet> {
    if polygon.is_unit_square() {
        return generate_grid_centers(polygon, n_per_side);
    }
    if n_per_side < 2 {
        return Err(Error::config(format!("n_per_side must be >= 2, got {n_per_side}")));
    }
    let (min, max) = polygon.bounding_box();
    let extent = (max.x - min.x).max(max.y - min.y);
    generate_interior_centers(polygon, extent / (n_per_side - 1) as f64)
}

/// Probe grid used by [`fill_distance`]: `ceil(resolution * extent)`
/// intervals per bounding-box direction, restricted to the closed polygon.
pub fn probe_grid(polygon: &Polygon, probe_resolution: usize) -> Vec<Vec<Point>> {
    let (min, max) = polygon.bounding_box();
    let mx = ((max.x - min.x) * probe_resolution as f64).ceil().max(1.0) as usize;
    let my = ((max.y - min.y) * probe_resolution as f64).ceil().max(1.0) as usize;
    (0..=my)
        .into_par_iter()
        .map(|j| {
            let y = min.y + (max.y - min.y) * j as f64 / my as f64;
            (0..=mx)
                .map(|i| Point::new(min.x + (max.x - min.x) * i as f64 / mx as f64, y))
                .filter(|p| polygon.contains(p))
                .collect()
        })
        .collect()
}

/// Probe-grid estimate of `sup_{x in polygon} min_j |x - x_j|`.
pub fn fill_distance(centers: &[Point], polygon: &Polygon, probe_resolution: usize) -> Result<f64> {
    if centers.is_empty() {
        return Err(Error::config("fill distance of an empty center set"));
    }
    if probe_resolution < 100 {
        return Err(Error::config(format!(
            "probe resolution {probe_resolution} is below 100 points per unit length"
        )));
    }
    let spacing = (polygon.area() / centers.len() as f64).sqrt();
    let index = PointIndex::new(centers, spacing.max(1e-6));
    let rows = probe_grid(polygon, probe_resolution);
    let h = rows
        .par_iter()
        .map(|row| {
            row.iter()
                .map(|p| index.nearest(p).map_or(0.0, |(_, d)| d))
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    Ok(h)
}

/// One straight boundary segment of the partition `T_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryElement {
    pub edge: usize,
    /// Edge length divided by the element count of the edge.
    pub length: f64,
    pub s_start: f64,
    pub s_end: f64,
    pub start: Point,
    pub end: Point,
}

impl BoundaryElement {
    pub fn length(&self) -> f64 {
        self.length
    }

    /// Point at local coordinate `t` in `[0, 1]`.
    pub fn point_at(&self, t: f64) -> Point {
        self.start + (self.end - self.start) * t
    }

    pub fn distance_to(&self, p: &Point) -> f64 {
        point_segment_distance(p, &self.start, &self.end)
    }
}

/// Location on the boundary, as handed to boundary integrands.
#[derive(Clone, Copy, Debug)]
pub struct BoundaryPoint {
    /// Global arc length.
    pub s: f64,
    pub point: Point,
    pub edge: usize,
    pub element: usize,
    /// Local coordinate in the owning element.
    pub t: f64,
    pub normal: Vector,
}

/// Quasi-uniform partition of the boundary whose elements never straddle a
/// polygon vertex.
#[derive(Clone, Debug)]
pub struct BoundaryMesh {
    elements: Vec<BoundaryElement>,
    normals: Vec<Vector>,
    elements_per_edge: Vec<usize>,
    perimeter: f64,
    mesh_size: f64,
}

/// Splits every edge into `ceil(length / target_k)` equal elements.
pub fn partition_boundary(polygon: &Polygon, target_k: f64) -> Result<BoundaryMesh> {
    let shortest = (0..polygon.num_edges())
        .map(|i| polygon.edge_length(i))
        .fold(f64::INFINITY, f64::min);
    if !(target_k > 0.0) || target_k > shortest * (1.0 + 1e-12) {
        return Err(Error::config(format!(
            "target_k = {target_k} must lie in (0, shortest edge = {shortest}]"
        )));
    }
    let counts = (0..polygon.num_edges())
        .map(|i| ((polygon.edge_length(i) / target_k) * (1.0 - 1e-12)).ceil().max(1.0) as usize)
        .collect();
    BoundaryMesh::with_counts(polygon, counts)
}

impl BoundaryMesh {
    /// Partition with an explicit element count per edge.
    pub fn with_counts(polygon: &Polygon, elements_per_edge: Vec<usize>) -> Result<Self> {
        if elements_per_edge.len() != polygon.num_edges() || elements_per_edge.contains(&0) {
            return Err(Error::config("need a positive element count for every polygon edge"));
        }
        let mut elements = Vec::new();
        let mut normals = Vec::new();
        let mut offset = 0.0;
        for (edge, &count) in elements_per_edge.iter().enumerate() {
            let (a, b) = polygon.edge(edge);
            let len = polygon.edge_length(edge);
            let normal = polygon.outward_normal(edge);
            for i in 0..count {
                let t0 = i as f64 / count as f64;
                let t1 = (i + 1) as f64 / count as f64;
                elements.push(BoundaryElement {
                    edge,
                    length: len / count as f64,
                    s_start: offset + len * t0,
                    s_end: offset + len * t1,
                    start: a + (b - a) * t0,
                    end: if i + 1 == count { b } else { a + (b - a) * t1 },
                });
                normals.push(normal);
            }
            offset += len;
        }
        let mesh_size = elements.iter().map(|e| e.length()).fold(0.0, f64::max);
        Ok(BoundaryMesh {
            elements,
            normals,
            elements_per_edge,
            perimeter: offset,
            mesh_size,
        })
    }

    pub fn elements(&self) -> &[BoundaryElement] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements_per_edge(&self) -> &[usize] {
        &self.elements_per_edge
    }

    pub fn perimeter(&self) -> f64 {
        self.perimeter
    }

    /// `k`, the largest element length.
    pub fn mesh_size(&self) -> f64 {
        self.mesh_size
    }

    pub fn normal(&self, element: usize) -> Vector {
        self.normals[element]
    }

    /// Element owning arc length `s`: half-open `[start, end)`, except that
    /// the last element also owns the closing point.
    pub fn locate(&self, s: f64) -> Result<usize> {
        let tol = 1e-12 * self.perimeter.max(1.0);
        if !(s >= -tol && s <= self.perimeter + tol) {
            return Err(Error::domain(format!("arc length {s} outside [0, {}]", self.perimeter)));
        }
        let idx = self.elements.partition_point(|e| e.s_start <= s);
        Ok(idx.saturating_sub(1).min(self.elements.len() - 1))
    }

    /// Boundary point at local coordinate `t` of an element.
    pub fn point_in_element(&self, element: usize, t: f64) -> BoundaryPoint {
        let e = &self.elements[element];
        BoundaryPoint {
            s: e.s_start + (e.s_end - e.s_start) * t,
            point: e.point_at(t),
            edge: e.edge,
            element,
            t,
            normal: self.normals[element],
        }
    }

    /// Boundary point at global arc length `s`.
    pub fn point_at(&self, s: f64) -> Result<BoundaryPoint> {
        let element = self.locate(s)?;
        let e = &self.elements[element];
        let t = ((s - e.s_start) / (e.s_end - e.s_start)).clamp(0.0, 1.0);
        let mut bp = self.point_in_element(element, t);
        bp.s = s;
        Ok(bp)
    }
}
