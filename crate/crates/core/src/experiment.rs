//! Batch runs driven by a [`RunConfig`]: single solves, convergence sweeps,
//! interpolation studies and inf-sup probes, with their output files.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{
    boundary_l2_gram, estimate_infsup, fit_rate, h1_error, interpolation_rate_study, l2_boundary_error,
    ConvergenceRecord, ConvergenceRow, ErrorColumn, ExactSolution, InterpolationStudy, RateParameter,
};
use crate::assembly::SaddleSystem;
use crate::config::{InterpolationTarget, Mode, RunConfig};
use crate::discretization::Discretization;
use crate::error::{Error, Result};
use crate::geometry::{centers_per_side, CenterSet};
use crate::multiplier::MultiplierSpace;
use crate::params::ParameterRecord;
use crate::solver::{solve, GalerkinResiduals, MixedSolution};

/// Trial space, multiplier space and quadrature for grid `grid_index`.
pub fn discretization(cfg: &RunConfig, grid_index: usize) -> Result<Arc<Discretization>> {
    let centers = centers_per_side(&cfg.polygon, cfg.grids[grid_index])?;
    let mesh = cfg
        .k_rule
        .rule(grid_index)
        .partition(&cfg.polygon, centers.fill_distance(), cfg.r)?;
    let space = MultiplierSpace::new(mesh, cfg.p)?;
    Ok(Arc::new(Discretization::new(
        cfg.polygon.clone(),
        centers,
        cfg.kernel(),
        space,
        &cfg.quadrature,
    )?))
}

pub struct GridRun {
    pub row: ConvergenceRow,
    pub system: SaddleSystem,
    pub solution: MixedSolution,
}

/// Assembles, solves and measures both errors on one grid.
pub fn run_grid(cfg: &RunConfig, grid_index: usize) -> Result<GridRun> {
    let start = Instant::now();
    let exact = ExactSolution::new(cfg.exact, cfg.kappa)?;
    let disc = discretization(cfg, grid_index)?;
    let system = SaddleSystem::assemble(Arc::clone(&disc), cfg.kappa, |x| exact.f(x), |bp| exact.g(bp))?;
    let solution = solve(&system)?;
    let h1 = h1_error(&solution, &exact, disc.domain_quadrature())?;
    let l2 = l2_boundary_error(&solution, &exact, disc.boundary_rule())?;
    let params = &system.params;
    let row = ConvergenceRow {
        n_centers: params.n_centers,
        n_multipliers: params.n_multipliers,
        fill_distance: params.fill_distance,
        k: params.k,
        r: params.r,
        tau: params.tau,
        p: params.p,
        h1_error: h1,
        l2_lambda_error: l2,
        cond_estimate: solution.condition_estimate,
        runtime_s: start.elapsed().as_secs_f64(),
    };
    Ok(GridRun { row, system, solution })
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn write_json(dir: &Path, name: &str, value: &impl Serialize) -> Result<()> {
    let mut out = create(dir, name)?;
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| Error::config(e.to_string()))?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct SingleReport {
    pub params: ParameterRecord,
    pub exact: String,
    pub h1_error: f64,
    pub l2_lambda_error: f64,
    pub residual_norm: f64,
    pub cond_estimate: f64,
    pub galerkin_orthogonality: f64,
    pub constraint_residual: f64,
}

/// One solve: writes `solution.dump`, `convergence.csv` and `report.json`.
pub fn run_single(cfg: &RunConfig, out_dir: &Path) -> Result<SingleReport> {
    cfg.check_mode(Mode::Solve)?;
    fs::create_dir_all(out_dir)?;
    let run = run_grid(cfg, 0)?;
    let GalerkinResiduals {
        orthogonality,
        constraint,
    } = run.solution.galerkin_residuals(&run.system)?;
    let mut dump = create(out_dir, "solution.dump")?;
    run.solution.write_dump(&mut dump)?;
    dump.flush()?;
    let record = ConvergenceRecord::new(vec![run.row.clone()]);
    let mut csv = create(out_dir, "convergence.csv")?;
    record.write_csv(&mut csv)?;
    csv.flush()?;
    let report = SingleReport {
        params: run.system.params.clone(),
        exact: cfg.exact.to_string(),
        h1_error: run.row.h1_error,
        l2_lambda_error: run.row.l2_lambda_error,
        residual_norm: run.solution.residual_norm,
        cond_estimate: run.solution.condition_estimate,
        galerkin_orthogonality: orthogonality,
        constraint_residual: constraint,
    };
    write_json(out_dir, "report.json", &report)?;
    Ok(report)
}

#[derive(Clone, Debug, Serialize)]
pub struct FailedRow {
    pub n_per_side: usize,
    pub error: String,
    pub exit_code: i32,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepSummary {
    pub kernel: String,
    pub tau: f64,
    pub r: f64,
    pub polygon: String,
    pub exact: String,
    pub grids: Vec<usize>,
    pub rows: usize,
    /// `H^1` rate against `h_X`; absent below 3 rows.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h1_rate: Option<f64>,
    /// Multiplier `L2` rate against `k`; absent below 3 rows.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l2_lambda_rate: Option<f64>,
    pub failed: Vec<FailedRow>,
}

#[derive(Clone, Debug)]
pub struct SweepReport {
    pub record: ConvergenceRecord,
    pub summary: SweepSummary,
}

impl SweepReport {
    /// 0 when every row succeeded, 4 when some failed, and the first row's
    /// code when all failed.
    pub fn exit_code(&self) -> i32 {
        match (&self.summary.failed[..], self.record.is_empty()) {
            ([], _) => 0,
            ([first, ..], true) => first.exit_code,
            (_, false) => 4,
        }
    }
}

fn optional_rate(record: &ConvergenceRecord, column: ErrorColumn, parameter: RateParameter) -> Option<f64> {
    record.rate(column, parameter).ok().flatten()
}

/// Solves every grid (concurrently), then writes in grid order:
/// `convergence.csv`, `convergence.dat`, one two-column `.dat` per curve and
/// `summary.json`. Failed rows are reported in the summary.
pub fn run_sweep(cfg: &RunConfig, out_dir: &Path) -> Result<SweepReport> {
    cfg.check_mode(Mode::Sweep)?;
    fs::create_dir_all(out_dir)?;
    let results: Vec<Result<ConvergenceRow>> = (0..cfg.grids.len())
        .into_par_iter()
        .map(|i| run_grid(cfg, i).map(|run| run.row))
        .collect();
    let mut rows = Vec::new();
    let mut failed = Vec::new();
    for (n, result) in cfg.grids.iter().zip(results) {
        match result {
            Ok(row) => rows.push(row),
            Err(e) => failed.push(FailedRow {
                n_per_side: *n,
                error: e.to_string(),
                exit_code: e.exit_code(),
            }),
        }
    }
    let record = ConvergenceRecord::new(rows);
    let summary = SweepSummary {
        kernel: cfg.kernel.name().to_string(),
        tau: cfg.kernel.tau(),
        r: cfg.r,
        polygon: cfg.polygon_name.clone(),
        exact: cfg.exact.to_string(),
        grids: cfg.grids.clone(),
        rows: record.len(),
        h1_rate: optional_rate(&record, ErrorColumn::H1, RateParameter::FillDistance),
        l2_lambda_rate: optional_rate(&record, ErrorColumn::L2Lambda, RateParameter::K),
        failed,
    };
    let mut csv = create(out_dir, "convergence.csv")?;
    record.write_csv(&mut csv)?;
    csv.flush()?;
    write_plot_data(&record, out_dir)?;
    write_json(out_dir, "summary.json", &summary)?;
    Ok(SweepReport { record, summary })
}

/// Plot data: unknowns `N + M` against both errors and the reference lines
/// `10 h_X` and `10 k^{1/2}`.
fn write_plot_data(record: &ConvergenceRecord, dir: &Path) -> Result<()> {
    type Curve = fn(&ConvergenceRow) -> f64;
    let curves: [(&str, Curve); 4] = [
        ("h1_error", |r| r.h1_error),
        ("l2_lambda_error", |r| r.l2_lambda_error),
        ("ref_h", |r| 10.0 * r.fill_distance),
        ("ref_k_half", |r| 10.0 * r.k.sqrt()),
    ];
    let unknowns = |r: &ConvergenceRow| r.n_centers + r.n_multipliers;
    let mut all = create(dir, "convergence.dat")?;
    writeln!(all, "# unknowns h1_error l2_lambda_error 10*h_X 10*k^(1/2)")?;
    for row in record.rows() {
        write!(all, "{}", unknowns(row))?;
        for (_, f) in &curves {
            write!(all, " {:.16e}", f(row))?;
        }
        writeln!(all)?;
    }
    all.flush()?;
    for (name, f) in &curves {
        let mut out = create(dir, &format!("{name}.dat"))?;
        for row in record.rows() {
            writeln!(out, "{} {:.16e}", unknowns(row), f(row))?;
        }
        out.flush()?;
    }
    Ok(())
}

/// Native-space interpolation of the configured target on every grid;
/// writes `interpolation.csv` and `interpolation.json`.
pub fn run_interpolation_study(cfg: &RunConfig, out_dir: &Path) -> Result<InterpolationStudy> {
    cfg.check_mode(Mode::InterpolationStudy)?;
    fs::create_dir_all(out_dir)?;
    let sets: Vec<CenterSet> = cfg
        .grids
        .iter()
        .map(|&n| centers_per_side(&cfg.polygon, n))
        .collect::<Result<_>>()?;
    let kernel = cfg.kernel();
    let anchor = sets[0].points()[0];
    let exact = ExactSolution::new(cfg.exact, cfg.kappa)?;
    let target = cfg.interpolation_target;
    let v = move |x: &crate::geometry::Point| match target {
        InterpolationTarget::SinSin => (std::f64::consts::PI * x.x).sin() * (std::f64::consts::PI * x.y).sin(),
        InterpolationTarget::SingleKernel => kernel.eval(x, &anchor),
        InterpolationTarget::Exact(kind) => ExactSolution { kind, ..exact }.u(x),
    };
    let study = interpolation_rate_study(v, &cfg.polygon, &sets, &kernel, &cfg.quadrature)?;
    let mut csv = create(out_dir, "interpolation.csv")?;
    writeln!(csv, "N,h_X,q_X,l2_error,max_center_residual")?;
    for r in &study.rows {
        writeln!(
            csv,
            "{},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.n_centers, r.fill_distance, r.separation, r.l2_error, r.max_center_residual
        )?;
    }
    csv.flush()?;
    #[derive(Serialize)]
    struct Output<'a> {
        #[serde(flatten)]
        study: &'a InterpolationStudy,
        #[serde(skip_serializing_if = "Option::is_none")]
        note: Option<&'static str>,
    }
    let note = match cfg.kernel {
        crate::kernels::Smoothness::C2 => Some(
            "C2 interpolation matrices become ill-conditioned on fine grids at fixed r; \
             the asymptotic rate is not observable in double precision",
        ),
        crate::kernels::Smoothness::C0 => None,
    };
    write_json(out_dir, "interpolation.json", &Output { study: &study, note })?;
    Ok(study)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InfsupRow {
    #[serde(rename = "N")]
    pub n_centers: usize,
    #[serde(rename = "M")]
    pub n_multipliers: usize,
    #[serde(rename = "h_X")]
    pub fill_distance: f64,
    pub k: f64,
    pub beta: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct InfsupReport {
    pub rows: Vec<InfsupRow>,
    /// Log-log slope of `beta` against `h_X` over all rows; absent below 3.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slope: Option<f64>,
}

/// Inf-sup estimate on grid `grid_index`.
pub fn infsup_grid(cfg: &RunConfig, grid_index: usize) -> Result<InfsupRow> {
    let disc = discretization(cfg, grid_index)?;
    // with kappa = 1 the stiffness block is the H^1 Gram matrix
    let system = SaddleSystem::assemble(Arc::clone(&disc), 1.0, |_| 0.0, |_| 0.0)?;
    let w = boundary_l2_gram(disc.multipliers());
    let beta = estimate_infsup(&system, &system.a, &w)?;
    let params = &system.params;
    Ok(InfsupRow {
        n_centers: params.n_centers,
        n_multipliers: params.n_multipliers,
        fill_distance: params.fill_distance,
        k: params.k,
        beta,
    })
}

/// `beta` per grid; writes `infsup.csv` and `infsup.json`.
pub fn run_infsup_probe(cfg: &RunConfig, out_dir: &Path) -> Result<InfsupReport> {
    cfg.check_mode(Mode::InfsupProbe)?;
    fs::create_dir_all(out_dir)?;
    let rows: Vec<InfsupRow> = (0..cfg.grids.len())
        .into_par_iter()
        .map(|i| infsup_grid(cfg, i))
        .collect::<Result<_>>()?;
    let slope = if rows.len() >= 3 && rows.iter().all(|r| r.beta > 0.0) {
        let h: Vec<f64> = rows.iter().map(|r| r.fill_distance).collect();
        let b: Vec<f64> = rows.iter().map(|r| r.beta).collect();
        Some(fit_rate(&h, &b, rows.len())?)
    } else {
        None
    };
    let mut csv = create(out_dir, "infsup.csv")?;
    writeln!(csv, "N,M,h_X,k,beta")?;
    for r in &rows {
        writeln!(
            csv,
            "{},{},{:.16e},{:.16e},{:.16e}",
            r.n_centers, r.n_multipliers, r.fill_distance, r.k, r.beta
        )?;
    }
    csv.flush()?;
    let report = InfsupReport { rows, slope };
    write_json(out_dir, "infsup.json", &report)?;
    Ok(report)
}
