//! Assembly of the saddle-point system
//!
//! ```text
//! [ A   B ] [u]   [F]
//! [ B^T 0 ] [l] = [G]
//! ```
//!
//! with `A_ij = a(Phi_i, Phi_j)`, `B_ij = b(Phi_i, mu_j)`, `F_i = F(Phi_i)`
//! and `G_j = G(mu_j)`. Only kernel pairs with overlapping supports are
//! visited. Accumulation order is fixed (cells in order, nodes in order), so
//! assembled matrices are bit-reproducible and `A` is exactly symmetric.

use std::collections::BTreeMap;
use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use sprs::CsMat;

use crate::discretization::Discretization;
use crate::error::{check_finite, Error, Result};
use crate::geometry::{BoundaryElement, BoundaryPoint, Point, Vector};
use crate::kernels::WendlandKernel;
use crate::multiplier::{shifted_legendre, MultiplierSpace};
use crate::neighbors::{neighbor_pairs, PointIndex};
use crate::params::ParameterRecord;
use crate::quadrature::{DomainQuadrature, QuadRule1D};

const CELL_BATCH: usize = 128;

/// Stiffness `int grad Phi_i . grad Phi_j` and mass `int Phi_i Phi_j` on a
/// shared sparsity pattern.
#[derive(Clone, Debug)]
pub struct StiffnessMass {
    pub stiffness: CsMat<f64>,
    pub mass: CsMat<f64>,
}

impl StiffnessMass {
    /// `stiffness + kappa * mass`.
    pub fn combine(&self, kappa: f64) -> CsMat<f64> {
        let data: Vec<f64> = self
            .stiffness
            .data()
            .iter()
            .zip(self.mass.data())
            .map(|(k, m)| k + kappa * m)
            .collect();
        CsMat::new(
            self.stiffness.shape(),
            self.stiffness.indptr().raw_storage().to_vec(),
            self.stiffness.indices().to_vec(),
            data,
        )
    }
}

struct CellBlock {
    ids: Vec<usize>,
    // row-major |ids| x |ids|, upper triangle filled
    stiffness: Vec<f64>,
    mass: Vec<f64>,
}

/// Centers whose support can reach the given cell, ascending.
fn centers_touching(index: &PointIndex, center: &Point, radius: f64) -> Vec<usize> {
    index.within(center, radius)
}

fn cell_block(
    quad: &DomainQuadrature,
    cell: usize,
    centers: &[Point],
    index: &PointIndex,
    kernel: &WendlandKernel,
) -> CellBlock {
    let c = &quad.cells()[cell];
    let r = kernel.scale();
    let ids = centers_touching(index, &c.rect.center(), r + c.rect.half_diagonal() * (1.0 + 1e-12));
    let n = ids.len();
    let mut stiffness = vec![0.0; n * n];
    let mut mass = vec![0.0; n * n];
    let mut active: Vec<(usize, f64, Vector)> = Vec::with_capacity(n);
    for node in c.nodes.clone() {
        let x = &quad.nodes()[node];
        let w = quad.weights()[node];
        active.clear();
        for (a, &i) in ids.iter().enumerate() {
            if (x - centers[i]).norm() < r {
                let (v, g) = kernel.eval_and_grad(x, &centers[i]);
                active.push((a, v, g));
            }
        }
        for (ia, &(a, va, ga)) in active.iter().enumerate() {
            let row = a * n;
            let wva = w * va;
            let wga = ga * w;
            for &(b, vb, gb) in &active[ia..] {
                stiffness[row + b] += wga.dot(&gb);
                mass[row + b] += wva * vb;
            }
        }
    }
    CellBlock { ids, stiffness, mass }
}

/// Upper-triangular pattern (`j >= i`) of pairs closer than `radius`.
fn upper_pattern(centers: &[Point], radius: f64) -> (Vec<usize>, Vec<usize>) {
    let pairs = neighbor_pairs(centers, radius);
    let mut indptr = vec![0usize; centers.len() + 1];
    for &(i, _) in &pairs {
        indptr[i + 1] += 1;
    }
    for i in 0..centers.len() {
        indptr[i + 1] += indptr[i];
    }
    let indices = pairs.into_iter().map(|(_, j)| j).collect();
    (indptr, indices)
}

/// Mirrors an upper-triangular CSR into a full symmetric CSR. Both
/// triangles reference the same values, so the result is exactly symmetric.
fn symmetrize(
    n: usize,
    indptr: &[usize],
    indices: &[usize],
    values: &[&[f64]],
) -> (Vec<usize>, Vec<usize>, Vec<Vec<f64>>) {
    let mut lower: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for i in 0..n {
        for t in indptr[i]..indptr[i + 1] {
            let j = indices[t];
            if j > i {
                lower[j].push((i, t));
            }
        }
    }
    let mut out_ptr = vec![0usize; n + 1];
    let mut out_idx = Vec::with_capacity(2 * indices.len());
    let mut out_vals: Vec<Vec<f64>> = values.iter().map(|_| Vec::with_capacity(2 * indices.len())).collect();
    for i in 0..n {
        for &(j, t) in &lower[i] {
            out_idx.push(j);
            for (o, v) in out_vals.iter_mut().zip(values) {
                o.push(v[t]);
            }
        }
        for t in indptr[i]..indptr[i + 1] {
            out_idx.push(indices[t]);
            for (o, v) in out_vals.iter_mut().zip(values) {
                o.push(v[t]);
            }
        }
        out_ptr[i + 1] = out_idx.len();
    }
    (out_ptr, out_idx, out_vals)
}

/// Stiffness and mass matrices of the trial space by domain quadrature.
pub fn assemble_stiffness_mass(
    centers: &[Point],
    kernel: &WendlandKernel,
    quad: &DomainQuadrature,
) -> Result<StiffnessMass> {
    let n = centers.len();
    let r = kernel.scale();
    let index = PointIndex::new(centers, r);
    let (indptr, indices) = upper_pattern(centers, 2.0 * r);
    let mut stiff = vec![0.0; indices.len()];
    let mut mass = vec![0.0; indices.len()];

    let cells: Vec<usize> = (0..quad.cells().len()).collect();
    for batch in cells.chunks(CELL_BATCH) {
        let blocks: Vec<CellBlock> = batch
            .par_iter()
            .map(|&c| cell_block(quad, c, centers, &index, kernel))
            .collect();
        for block in blocks {
            let m = block.ids.len();
            for a in 0..m {
                let row = block.ids[a];
                let cols = &indices[indptr[row]..indptr[row + 1]];
                let mut t = 0;
                for b in a..m {
                    let col = block.ids[b];
                    while t < cols.len() && cols[t] < col {
                        t += 1;
                    }
                    if t < cols.len() && cols[t] == col {
                        stiff[indptr[row] + t] += block.stiffness[a * m + b];
                        mass[indptr[row] + t] += block.mass[a * m + b];
                    } else {
                        // supports do not overlap: nothing was accumulated
                        debug_assert_eq!(block.stiffness[a * m + b], 0.0);
                    }
                }
            }
        }
    }

    for i in 0..n {
        for t in indptr[i]..indptr[i + 1] {
            let j = indices[t];
            check_finite(stiff[t], || format!("A[{i}, {j}] (stiffness)"))?;
            check_finite(mass[t], || format!("A[{i}, {j}] (mass)"))?;
        }
    }

    let (ptr, idx, mut vals) = symmetrize(n, &indptr, &indices, &[&stiff, &mass]);
    let mass = vals.pop().unwrap();
    let stiff = vals.pop().unwrap();
    Ok(StiffnessMass {
        stiffness: CsMat::new((n, n), ptr.clone(), idx.clone(), stiff),
        mass: CsMat::new((n, n), ptr, idx, mass),
    })
}

/// `A_ij = int (grad Phi_i . grad Phi_j + kappa Phi_i Phi_j) dx`.
pub fn assemble_a(
    centers: &[Point],
    kernel: &WendlandKernel,
    kappa: f64,
    quad: &DomainQuadrature,
) -> Result<CsMat<f64>> {
    if !(kappa >= 0.0) {
        return Err(Error::config(format!("kappa must be nonnegative, got {kappa}")));
    }
    Ok(assemble_stiffness_mass(centers, kernel, quad)?.combine(kappa))
}

/// Sub-intervals of `[0, 1]` (local element coordinate) on which the trace of
/// a kernel centered at `center` is smooth: the support chord split at the
/// foot of the perpendicular from the center.
pub fn trace_pieces(element: &BoundaryElement, center: &Point, r: f64) -> Vec<(f64, f64)> {
    let dir = element.end - element.start;
    let len2 = dir.norm_squared();
    let foot = (center - element.start).dot(&dir) / len2;
    let dist2 = (center - (element.start + dir * foot)).norm_squared();
    if dist2 >= r * r {
        return Vec::new();
    }
    let half = (r * r - dist2).sqrt() / len2.sqrt();
    let (lo, hi) = ((foot - half).max(0.0), (foot + half).min(1.0));
    if lo >= hi {
        return Vec::new();
    }
    if foot > lo && foot < hi {
        vec![(lo, foot), (foot, hi)]
    } else {
        vec![(lo, hi)]
    }
}

/// Sorted breakpoints in `[0, 1]` of an element, including both ends, such
/// that every kernel trace from `centers` is smooth between consecutive ones.
pub fn element_breakpoints<'a>(
    element: &BoundaryElement,
    centers: impl Iterator<Item = &'a Point>,
    r: f64,
) -> Vec<f64> {
    let mut ts = vec![0.0, 1.0];
    for c in centers {
        for (a, b) in trace_pieces(element, c, r) {
            ts.push(a);
            ts.push(b);
        }
    }
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    ts
}

/// `B_ij = int_Gamma Phi_i mu_j ds`, an `N x M` matrix.
///
/// Each kernel trace is integrated piecewise on its support chord, split at
/// the foot point, so the Gauss rule only sees smooth integrands.
pub fn assemble_b(
    centers: &[Point],
    kernel: &WendlandKernel,
    space: &MultiplierSpace,
    rule: &QuadRule1D,
) -> Result<CsMat<f64>> {
    if rule.order() < space.degree() + 3 {
        return Err(Error::config(format!(
            "boundary rule of order {} is too coarse for degree {} (need {})",
            rule.order(),
            space.degree(),
            space.degree() + 3
        )));
    }
    let r = kernel.scale();
    let index = PointIndex::new(centers, r);
    let mesh = space.mesh();
    let ld = space.local_dim();
    let mut entries: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for (e, element) in mesh.elements().iter().enumerate() {
        let len = element.length();
        let mid = element.point_at(0.5);
        for i in index.within(&mid, r + 0.5 * len) {
            let c = &centers[i];
            let mut acc = vec![0.0; ld];
            for (a, b) in trace_pieces(element, c, r) {
                for (tau, w) in rule.iter() {
                    let t = a + (b - a) * tau;
                    let phi = kernel.eval(&element.point_at(t), c);
                    for (q, slot) in acc.iter_mut().enumerate() {
                        *slot += w * (b - a) * phi * shifted_legendre(q, t);
                    }
                }
            }
            for (q, v) in acc.into_iter().enumerate() {
                if v != 0.0 {
                    let j = e * ld + q;
                    let v = check_finite(v * len, || format!("B[{i}, {j}]"))?;
                    entries.insert((i, j), v);
                }
            }
        }
    }
    Ok(csr_from_sorted(centers.len(), space.dim(), entries))
}

fn csr_from_sorted(rows: usize, cols: usize, entries: BTreeMap<(usize, usize), f64>) -> CsMat<f64> {
    let mut indptr = vec![0usize; rows + 1];
    let mut indices = Vec::with_capacity(entries.len());
    let mut data = Vec::with_capacity(entries.len());
    for ((i, j), v) in entries {
        indptr[i + 1] += 1;
        indices.push(j);
        data.push(v);
    }
    for i in 0..rows {
        indptr[i + 1] += indptr[i];
    }
    CsMat::new((rows, cols), indptr, indices, data)
}

/// `F_i = int f Phi_i dx`.
pub fn assemble_f(
    centers: &[Point],
    kernel: &WendlandKernel,
    f: impl Fn(&Point) -> f64 + Sync,
    quad: &DomainQuadrature,
) -> Result<Vec<f64>> {
    let r = kernel.scale();
    let index = PointIndex::new(centers, r);
    let mut out = vec![0.0; centers.len()];
    let cells: Vec<usize> = (0..quad.cells().len()).collect();
    for batch in cells.chunks(CELL_BATCH) {
        let blocks: Vec<Result<(Vec<usize>, Vec<f64>)>> = batch
            .par_iter()
            .map(|&c| {
                let cell = &quad.cells()[c];
                let ids = centers_touching(
                    &index,
                    &cell.rect.center(),
                    r + cell.rect.half_diagonal() * (1.0 + 1e-12),
                );
                let mut vals = vec![0.0; ids.len()];
                for node in cell.nodes.clone() {
                    let x = &quad.nodes()[node];
                    let fx = check_finite(f(x), || format!("load f at ({}, {})", x.x, x.y))?;
                    let wf = quad.weights()[node] * fx;
                    for (a, &i) in ids.iter().enumerate() {
                        vals[a] += wf * kernel.eval(x, &centers[i]);
                    }
                }
                Ok((ids, vals))
            })
            .collect();
        for block in blocks {
            let (ids, vals) = block?;
            for (i, v) in ids.into_iter().zip(vals) {
                out[i] += v;
            }
        }
    }
    Ok(out)
}

/// `G_j = int_Gamma g mu_j ds`.
pub fn assemble_g(space: &MultiplierSpace, g: impl Fn(&BoundaryPoint) -> f64, rule: &QuadRule1D) -> Result<Vec<f64>> {
    let mesh = space.mesh();
    let ld = space.local_dim();
    let mut out = vec![0.0; space.dim()];
    for (e, element) in mesh.elements().iter().enumerate() {
        let len = element.length();
        for (t, w) in rule.iter() {
            let bp = mesh.point_in_element(e, t);
            let gv = check_finite(g(&bp), || format!("boundary data g at s = {}", bp.s))?;
            for q in 0..ld {
                out[e * ld + q] += w * len * gv * shifted_legendre(q, t);
            }
        }
    }
    Ok(out)
}

/// Assembled Galerkin system together with the spaces it was built on.
#[derive(Clone, Debug)]
pub struct SaddleSystem {
    pub a: CsMat<f64>,
    pub b: CsMat<f64>,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub kappa: f64,
    pub params: ParameterRecord,
    disc: Arc<Discretization>,
}

impl SaddleSystem {
    pub fn assemble(
        disc: Arc<Discretization>,
        kappa: f64,
        f: impl Fn(&Point) -> f64 + Sync,
        g: impl Fn(&BoundaryPoint) -> f64,
    ) -> Result<Self> {
        let centers = disc.centers().points();
        let kernel = disc.kernel();
        let quad = disc.domain_quadrature();
        let a = assemble_a(centers, kernel, kappa, quad)?;
        let b = assemble_b(centers, kernel, disc.multipliers(), disc.boundary_rule())?;
        let f = assemble_f(centers, kernel, f, quad)?;
        let g = assemble_g(disc.multipliers(), g, disc.boundary_rule())?;
        Ok(Self::from_parts(disc, a, b, f, g, kappa))
    }

    pub fn from_parts(
        disc: Arc<Discretization>,
        a: CsMat<f64>,
        b: CsMat<f64>,
        f: Vec<f64>,
        g: Vec<f64>,
        kappa: f64,
    ) -> Self {
        let params = disc.params(kappa);
        SaddleSystem {
            a,
            b,
            f,
            g,
            kappa,
            params,
            disc,
        }
    }

    pub fn discretization(&self) -> &Arc<Discretization> {
        &self.disc
    }

    pub fn n(&self) -> usize {
        self.a.rows()
    }

    pub fn m(&self) -> usize {
        self.b.cols()
    }

    /// Writes the full block matrix as `i j value` lines (zero-based) after
    /// a `#`-prefixed JSON header with the parameter record.
    pub fn write_matrix_dump(&self, mut out: impl Write) -> Result<()> {
        let header = serde_json::to_string(&self.params).map_err(|e| Error::config(e.to_string()))?;
        writeln!(out, "# {header}")?;
        let n = self.n();
        let mut lines: Vec<(usize, usize, f64)> = Vec::new();
        for (v, (i, j)) in self.a.iter() {
            lines.push((i, j, *v));
        }
        for (v, (i, j)) in self.b.iter() {
            lines.push((i, n + j, *v));
            lines.push((n + j, i, *v));
        }
        lines.sort_by_key(|&(i, j, _)| (i, j));
        for (i, j, v) in lines {
            writeln!(out, "{i} {j} {v:.16e}")?;
        }
        Ok(())
    }
}
