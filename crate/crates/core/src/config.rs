//! Run configuration: a flat TOML file, validated before any computation.
//!
//! ```toml
//! polygon = "unit_square"      # or vertices = [[0, 0], [1, 0], [0, 1]]
//! kernel = "wendland_c2"
//! r = 0.2
//! kappa = 0.0
//! exact = "quadratic"
//! grids = [9, 17, 33]
//! p = 0
//! k_rule = "hx_over_r"         # or k_rule = [0.5, 0.25, 0.125]
//! quad_points_per_cell = 5
//! quad_cell_size = "auto"      # or a number
//! boundary_quad_points = 16
//! quad_refinement = 1
//! out = "out/sweep"
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;

use crate::analysis::ExactKind;
use crate::discretization::{CellRule, KRule, QuadratureSettings};
use crate::error::{Error, Result};
use crate::geometry::{Point, Polygon};
use crate::kernels::{Smoothness, WendlandKernel};
use crate::multiplier::MAX_DEGREE;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Solve,
    Sweep,
    InterpolationStudy,
    InfsupProbe,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Solve => "solve",
            Mode::Sweep => "sweep",
            Mode::InterpolationStudy => "interpolation_study",
            Mode::InfsupProbe => "infsup_probe",
        }
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Mode::Solve, Mode::Sweep, Mode::InterpolationStudy, Mode::InfsupProbe]
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::config(format!("unknown mode '{s}'")))
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Function interpolated by the interpolation study.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InterpolationTarget {
    /// `sin(pi x) sin(pi y)`.
    SinSin,
    /// One kernel centered at the first center, so the error sits at the
    /// quadrature floor.
    SingleKernel,
    Exact(ExactKind),
}

impl FromStr for InterpolationTarget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sin_sin" => Ok(InterpolationTarget::SinSin),
            "single_kernel" => Ok(InterpolationTarget::SingleKernel),
            other => other.parse().map(InterpolationTarget::Exact).map_err(|_| {
                Error::config(format!(
                    "unknown interpolation target '{other}' (expected sin_sin, single_kernel, quadratic or trig)"
                ))
            }),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum KSpec {
    HxOverR,
    /// One target element size per grid.
    Explicit(Vec<f64>),
}

impl KSpec {
    pub fn rule(&self, grid_index: usize) -> KRule {
        match self {
            KSpec::HxOverR => KRule::HxOverR,
            KSpec::Explicit(ks) => KRule::Target(ks[grid_index]),
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawKRule {
    Name(String),
    List(Vec<f64>),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawCellSize {
    Name(String),
    Size(f64),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    mode: Option<String>,
    polygon: Option<String>,
    vertices: Option<Vec<[f64; 2]>>,
    kernel: String,
    r: f64,
    #[serde(default)]
    kappa: f64,
    exact: Option<String>,
    grids: Vec<usize>,
    #[serde(default)]
    p: usize,
    k_rule: Option<RawKRule>,
    quad_points_per_cell: Option<usize>,
    quad_cell_size: Option<RawCellSize>,
    boundary_quad_points: Option<usize>,
    quad_refinement: Option<usize>,
    interpolation_target: Option<String>,
    out: Option<PathBuf>,
}

/// A validated run description.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub mode: Option<Mode>,
    pub polygon_name: String,
    pub polygon: Polygon,
    pub kernel: Smoothness,
    pub r: f64,
    pub kappa: f64,
    pub exact: ExactKind,
    pub grids: Vec<usize>,
    pub p: usize,
    pub k_rule: KSpec,
    pub quadrature: QuadratureSettings,
    pub interpolation_target: InterpolationTarget,
    pub out_dir: PathBuf,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::config(format!("invalid config: {e}")))?;
        Self::from_raw(raw)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    fn from_raw(raw: RawConfig) -> Result<Self> {
        let mode = raw.mode.as_deref().map(str::parse).transpose()?;
        let (polygon_name, polygon) = match (raw.polygon, raw.vertices) {
            (Some(_), Some(_)) => return Err(Error::config("give either polygon or vertices, not both")),
            (Some(name), None) => {
                let poly = Polygon::preset(&name)?;
                (name, poly)
            }
            (None, Some(vs)) => {
                let poly = Polygon::new(vs.iter().map(|v| Point::new(v[0], v[1])).collect())?;
                ("custom".to_string(), poly)
            }
            (None, None) => ("unit_square".to_string(), Polygon::unit_square()),
        };
        let kernel: Smoothness = raw.kernel.parse()?;
        WendlandKernel::new(kernel, raw.r)?;
        if !(raw.kappa >= 0.0 && raw.kappa.is_finite()) {
            return Err(Error::config(format!(
                "kappa must be finite and nonnegative, got {}",
                raw.kappa
            )));
        }
        let exact = raw.exact.as_deref().unwrap_or("quadratic").parse()?;
        if raw.grids.is_empty() {
            return Err(Error::config("grids must list at least one n_per_side"));
        }
        if let Some(&n) = raw.grids.iter().find(|&&n| n < 2) {
            return Err(Error::config(format!("n_per_side must be >= 2, got {n}")));
        }
        if raw.p > MAX_DEGREE {
            return Err(Error::config(format!(
                "multiplier degree p = {} exceeds {MAX_DEGREE}",
                raw.p
            )));
        }
        let k_rule = match raw.k_rule {
            None => KSpec::HxOverR,
            Some(RawKRule::Name(n)) if n == "hx_over_r" => KSpec::HxOverR,
            Some(RawKRule::Name(n)) => {
                return Err(Error::config(format!(
                    "unknown k_rule '{n}' (expected hx_over_r or a list)"
                )))
            }
            Some(RawKRule::List(ks)) => {
                if ks.len() != raw.grids.len() {
                    return Err(Error::config(format!(
                        "k_rule lists {} values for {} grids",
                        ks.len(),
                        raw.grids.len()
                    )));
                }
                if let Some(k) = ks.iter().find(|k| !(**k > 0.0 && k.is_finite())) {
                    return Err(Error::config(format!("element sizes must be positive, got {k}")));
                }
                KSpec::Explicit(ks)
            }
        };
        let defaults = QuadratureSettings::default();
        let cell_rule = match raw.quad_cell_size {
            None => CellRule::Auto,
            Some(RawCellSize::Name(n)) if n == "auto" => CellRule::Auto,
            Some(RawCellSize::Name(n)) => {
                return Err(Error::config(format!(
                    "quad_cell_size must be \"auto\" or a number, got '{n}'"
                )))
            }
            Some(RawCellSize::Size(s)) if s > 0.0 && s.is_finite() => CellRule::Fixed(s),
            Some(RawCellSize::Size(s)) => {
                return Err(Error::config(format!("quad_cell_size must be positive, got {s}")))
            }
        };
        let quadrature = QuadratureSettings {
            points_per_cell: raw.quad_points_per_cell.unwrap_or(defaults.points_per_cell),
            boundary_points: raw.boundary_quad_points.unwrap_or(defaults.boundary_points),
            cell_rule,
            refinement: raw.quad_refinement.unwrap_or(defaults.refinement),
        };
        if quadrature.points_per_cell == 0 || quadrature.refinement == 0 {
            return Err(Error::config("quadrature points and refinement must be positive"));
        }
        if quadrature.boundary_points < raw.p + 3 {
            return Err(Error::config(format!(
                "boundary_quad_points = {} is below p + 3 = {}",
                quadrature.boundary_points,
                raw.p + 3
            )));
        }
        let interpolation_target = raw.interpolation_target.as_deref().unwrap_or("sin_sin").parse()?;
        let cfg = RunConfig {
            mode,
            polygon_name,
            polygon,
            kernel,
            r: raw.r,
            kappa: raw.kappa,
            exact,
            grids: raw.grids,
            p: raw.p,
            k_rule,
            quadrature,
            interpolation_target,
            out_dir: raw.out.unwrap_or_else(|| PathBuf::from("out")),
        };
        if let Some(m) = mode {
            cfg.check_mode(m)?;
        }
        Ok(cfg)
    }

    /// Checks the config against the requirements of `mode`.
    pub fn check_mode(&self, mode: Mode) -> Result<()> {
        if let Some(m) = self.mode {
            if m != mode {
                return Err(Error::config(format!("config is for mode '{m}', not '{mode}'")));
            }
        }
        match mode {
            Mode::Solve if self.grids.len() != 1 => Err(Error::config(format!(
                "solve takes exactly one grid, got {}",
                self.grids.len()
            ))),
            Mode::Sweep | Mode::InterpolationStudy | Mode::InfsupProbe
                if self.grids.windows(2).any(|w| w[0] >= w[1]) =>
            {
                Err(Error::config(format!(
                    "grids must be strictly increasing, got {:?}",
                    self.grids
                )))
            }
            _ => Ok(()),
        }
    }

    pub fn kernel(&self) -> WendlandKernel {
        WendlandKernel::new(self.kernel, self.r).expect("validated")
    }

    pub fn with_mode(mut self, mode: Mode) -> Result<Self> {
        self.check_mode(mode)?;
        self.mode = Some(mode);
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SWEEP: &str = r#"
kernel = "wendland_c2"
r = 0.2
grids = [9, 17, 33]
"#;

    #[test]
    fn defaults() {
        let cfg = RunConfig::from_toml(SWEEP).unwrap();
        assert_eq!(cfg.polygon, Polygon::unit_square());
        assert_eq!(cfg.kappa, 0.0);
        assert_eq!(cfg.exact, ExactKind::Quadratic);
        assert_eq!(cfg.p, 0);
        assert_eq!(cfg.k_rule, KSpec::HxOverR);
        assert_eq!(cfg.quadrature, QuadratureSettings::default());
        assert!(cfg.check_mode(Mode::Sweep).is_ok());
        assert!(cfg.check_mode(Mode::Solve).is_err());
    }

    #[test]
    fn full_config() {
        let text = r#"
mode = "sweep"
vertices = [[0, 0], [2, 0], [0, 2]]
kernel = "wendland_c0"
r = 0.3
kappa = 1.5
exact = "trig"
grids = [5, 9]
p = 1
k_rule = [0.5, 0.25]
quad_points_per_cell = 4
quad_cell_size = 0.05
boundary_quad_points = 8
quad_refinement = 2
interpolation_target = "single_kernel"
out = "results"
"#;
        let cfg = RunConfig::from_toml(text).unwrap();
        assert_eq!(cfg.mode, Some(Mode::Sweep));
        assert_eq!(cfg.polygon.num_edges(), 3);
        assert_eq!(cfg.kernel, Smoothness::C0);
        assert_eq!(cfg.k_rule.rule(1), KRule::Target(0.25));
        assert_eq!(cfg.quadrature.cell_rule, CellRule::Fixed(0.05));
        assert_eq!(cfg.interpolation_target, InterpolationTarget::SingleKernel);
        assert_eq!(cfg.out_dir, PathBuf::from("results"));
        assert!(cfg.check_mode(Mode::InfsupProbe).is_err());
    }

    #[test]
    fn rejects_bad_values() {
        let bad = [
            SWEEP.replace("wendland_c2", "gaussian"),
            SWEEP.replace("r = 0.2", "r = 0.0"),
            SWEEP.replace("r = 0.2", "r = 0.2\nkappa = -1.0"),
            SWEEP.replace("r = 0.2", "r = 0.2\npolygon = \"circle\""),
            SWEEP.replace("r = 0.2", "r = 0.2\np = 4"),
            SWEEP.replace("r = 0.2", "r = 0.2\nk_rule = [0.5]"),
            SWEEP.replace("r = 0.2", "r = 0.2\nquad_cell_size = \"fine\""),
            SWEEP.replace("r = 0.2", "r = 0.2\ncolour = 3"),
            SWEEP.replace("[9, 17, 33]", "[]"),
            SWEEP
                .replace("[9, 17, 33]", "[9, 17, 33]\nmode = \"sweep\"")
                .replace("33]", "17]"),
        ];
        for text in &bad {
            let err = RunConfig::from_toml(text).unwrap_err();
            assert!(err.is_config(), "{text}: {err}");
        }
        let decreasing = RunConfig::from_toml(&SWEEP.replace("[9, 17, 33]", "[17, 9]")).unwrap();
        assert!(decreasing.check_mode(Mode::Sweep).is_err());
    }
}
