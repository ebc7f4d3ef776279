//! Uniform-grid spatial hashing for fixed-radius neighbor queries.

use crate::geometry::Point;

/// Bucket grid over a fixed point cloud.
///
/// Buckets store point indices in ascending order, so every traversal is
/// deterministic.
#[derive(Clone, Debug)]
pub struct PointIndex {
    points: Vec<Point>,
    origin: Point,
    cell: f64,
    nx: usize,
    ny: usize,
    starts: Vec<usize>,
    items: Vec<usize>,
}

const MAX_BUCKETS_PER_POINT: usize = 16;

impl PointIndex {
    pub fn new(points: &[Point], cell_size: f64) -> Self {
        assert!(cell_size > 0.0, "bucket size must be positive");
        let (min, max) = bounding_box(points);
        let width = (max.x - min.x).max(0.0);
        let height = (max.y - min.y).max(0.0);

        let mut cell = cell_size;
        let budget = MAX_BUCKETS_PER_POINT * points.len().max(1);
        loop {
            let nx = (width / cell).floor() as usize + 1;
            let ny = (height / cell).floor() as usize + 1;
            if nx.saturating_mul(ny) <= budget {
                break;
            }
            cell *= 2.0;
        }
        let nx = (width / cell).floor() as usize + 1;
        let ny = (height / cell).floor() as usize + 1;

        let bucket_of = |p: &Point| {
            let ix = (((p.x - min.x) / cell).floor() as usize).min(nx - 1);
            let iy = (((p.y - min.y) / cell).floor() as usize).min(ny - 1);
            iy * nx + ix
        };

        let mut counts = vec![0usize; nx * ny + 1];
        for p in points {
            counts[bucket_of(p) + 1] += 1;
        }
        for b in 0..nx * ny {
            counts[b + 1] += counts[b];
        }
        let starts = counts.clone();
        let mut fill = counts;
        let mut items = vec![0usize; points.len()];
        for (i, p) in points.iter().enumerate() {
            let b = bucket_of(p);
            items[fill[b]] = i;
            fill[b] += 1;
        }

        PointIndex {
            points: points.to_vec(),
            origin: min,
            cell,
            nx,
            ny,
            starts,
            items,
        }
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

    fn bucket_range(&self, lo: f64, hi: f64, origin: f64, n: usize) -> Option<(usize, usize)> {
        let a = ((lo - origin) / self.cell).floor();
        let b = ((hi - origin) / self.cell).floor();
        if b < 0.0 || a > (n - 1) as f64 {
            return None;
        }
        Some((a.max(0.0) as usize, (b as usize).min(n - 1)))
    }

    /// Calls `visit(index, distance)` for every point strictly closer than
    /// `radius` to `p`. Visit order is bucket-major and not sorted by index.
    pub fn for_each_within(&self, p: &Point, radius: f64, mut visit: impl FnMut(usize, f64)) {
        if self.points.is_empty() || radius <= 0.0 {
            return;
        }
        let Some((x0, x1)) = self.bucket_range(p.x - radius, p.x + radius, self.origin.x, self.nx) else {
            return;
        };
        let Some((y0, y1)) = self.bucket_range(p.y - radius, p.y + radius, self.origin.y, self.ny) else {
            return;
        };
        let r2 = radius * radius;
        for iy in y0..=y1 {
            for ix in x0..=x1 {
                let b = iy * self.nx + ix;
                for &i in &self.items[self.starts[b]..self.starts[b + 1]] {
                    let d2 = (self.points[i] - p).norm_squared();
                    if d2 < r2 {
                        visit(i, d2.sqrt());
                    }
                }
            }
        }
    }

    /// Indices of all points strictly within `radius` of `p`, ascending.
    pub fn within(&self, p: &Point, radius: f64) -> Vec<usize> {
        let mut out = Vec::new();
        self.for_each_within(p, radius, |i, _| out.push(i));
        out.sort_unstable();
        out
    }

    /// Nearest point and its distance. Ties resolve to the lowest index.
    pub fn nearest(&self, p: &Point) -> Option<(usize, f64)> {
        if self.points.is_empty() {
            return None;
        }
        let clamp = |v: f64, n: usize| -> isize {
            let c = (v / self.cell).floor();
            c.max(0.0).min((n - 1) as f64) as isize
        };
        let cx = clamp(p.x - self.origin.x, self.nx);
        let cy = clamp(p.y - self.origin.y, self.ny);
        let max_ring = self.nx.max(self.ny) as isize;

        let mut best: Option<(usize, f64)> = None;
        for ring in 0..=max_ring {
            for iy in (cy - ring)..=(cy + ring) {
                if iy < 0 || iy >= self.ny as isize {
                    continue;
                }
                for ix in (cx - ring)..=(cx + ring) {
                    if ix < 0 || ix >= self.nx as isize {
                        continue;
                    }
                    let on_ring = (iy - cy).abs() == ring || (ix - cx).abs() == ring;
                    if !on_ring {
                        continue;
                    }
                    let b = iy as usize * self.nx + ix as usize;
                    for &i in &self.items[self.starts[b]..self.starts[b + 1]] {
                        let d = (self.points[i] - p).norm();
                        best = match best {
                            Some((j, bd)) if bd < d || (bd == d && j < i) => Some((j, bd)),
                            _ => Some((i, d)),
                        };
                    }
                }
            }
            if let Some((_, d)) = best {
                if d <= ring as f64 * self.cell {
                    break;
                }
            }
        }
        best
    }
}

fn bounding_box(points: &[Point]) -> (Point, Point) {
    if points.is_empty() {
        return (Point::origin(), Point::origin());
    }
    let mut min = points[0];
    let mut max = points[0];
    for p in points {
        min.x = min.x.min(p.x);
        min.y = min.y.min(p.y);
        max.x = max.x.max(p.x);
        max.y = max.y.max(p.y);
    }
    (min, max)
}

/// All unordered pairs `(i, j)`, `i <= j`, with `|x_i - x_j| < radius`,
/// sorted lexicographically. Diagonal pairs are always included.
pub fn neighbor_pairs(points: &[Point], radius: f64) -> Vec<(usize, usize)> {
    let index = PointIndex::new(points, radius.max(f64::MIN_POSITIVE));
    let mut pairs = Vec::new();
    for (i, p) in points.iter().enumerate() {
        pairs.push((i, i));
        for j in index.within(p, radius) {
            if j > i {
                pairs.push((i, j));
            }
        }
    }
    pairs
}
