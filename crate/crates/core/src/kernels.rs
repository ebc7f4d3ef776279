//! Scaled compactly supported Wendland kernels in two dimensions.
//!
//! A kernel with scale `r` is `Phi_r(x) = r^-2 phi(|x| / r)`, supported on
//! the closed disk of radius `r`. Two members of the Wendland family are
//! provided:
//!
//! | name          | `phi(rho)` on `[0, 1)`     | smoothness | Fourier decay `tau` |
//! |---------------|----------------------------|------------|---------------------|
//! | `wendland_c0` | `(1 - rho)^2`              | C0         | 1.5                 |
//! | `wendland_c2` | `(1 - rho)^4 (4 rho + 1)`  | C2         | 2.5                 |

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point, Vector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Smoothness {
    C0,
    C2,
}

impl Smoothness {
    pub fn tau(self) -> f64 {
        match self {
            Smoothness::C0 => 1.5,
            Smoothness::C2 => 2.5,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Smoothness::C0 => "wendland_c0",
            Smoothness::C2 => "wendland_c2",
        }
    }

    /// Family whose Fourier decay exponent is `tau`.
    pub fn from_tau(tau: f64) -> Result<Self> {
        if tau == 1.5 {
            Ok(Smoothness::C0)
        } else if tau == 2.5 {
            Ok(Smoothness::C2)
        } else {
            Err(Error::config(format!(
                "no kernel family with tau = {tau}; expected 1.5 or 2.5"
            )))
        }
    }
}

impl FromStr for Smoothness {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "wendland_c0" => Ok(Smoothness::C0),
            "wendland_c2" => Ok(Smoothness::C2),
            other => Err(Error::config(format!(
                "unknown kernel '{other}'; expected wendland_c0 or wendland_c2"
            ))),
        }
    }
}

impl fmt::Display for Smoothness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WendlandKernel {
    smoothness: Smoothness,
    scale: f64,
    inv_scale: f64,
}

impl WendlandKernel {
    pub fn new(smoothness: Smoothness, scale: f64) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::config(format!("kernel scale r must be positive, got {scale}")));
        }
        Ok(WendlandKernel {
            smoothness,
            scale,
            inv_scale: 1.0 / scale,
        })
    }

    pub fn from_name(name: &str, scale: f64) -> Result<Self> {
        Self::new(name.parse()?, scale)
    }

    pub fn smoothness(&self) -> Smoothness {
        self.smoothness
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn tau(&self) -> f64 {
        self.smoothness.tau()
    }

    pub fn support_radius(&self) -> f64 {
        self.scale
    }

    /// Unscaled profile `phi(rho)`.
    pub fn eval_univariate(&self, rho: f64) -> Result<f64> {
        if !(rho >= 0.0) {
            return Err(Error::domain(format!("kernel profile evaluated at rho = {rho}")));
        }
        Ok(self.profile(rho))
    }

    #[inline]
    fn profile(&self, rho: f64) -> f64 {
        if rho >= 1.0 {
            return 0.0;
        }
        let s = 1.0 - rho;
        match self.smoothness {
            Smoothness::C0 => s * s,
            Smoothness::C2 => {
                let s2 = s * s;
                s2 * s2 * (4.0 * rho + 1.0)
            }
        }
    }

    /// `phi'(rho)`.
    pub fn profile_derivative(&self, rho: f64) -> f64 {
        if rho >= 1.0 {
            return 0.0;
        }
        let s = 1.0 - rho;
        match self.smoothness {
            Smoothness::C0 => -2.0 * s,
            Smoothness::C2 => -20.0 * rho * s * s * s,
        }
    }

    /// `Phi_r` at distance `dist` from the center.
    #[inline]
    pub fn eval_at_distance(&self, dist: f64) -> f64 {
        self.inv_scale * self.inv_scale * self.profile(dist * self.inv_scale)
    }

    pub fn eval(&self, x: &Point, center: &Point) -> f64 {
        self.eval_at_distance((x - center).norm())
    }

    /// Gradient in `x`; zero at the center and outside the support.
    pub fn grad(&self, x: &Point, center: &Point) -> Vector {
        self.eval_and_grad(x, center).1
    }

    #[inline]
    pub fn eval_and_grad(&self, x: &Point, center: &Point) -> (f64, Vector) {
        let d = x - center;
        let dist = d.norm();
        let rho = dist * self.inv_scale;
        if rho >= 1.0 {
            return (0.0, Vector::zeros());
        }
        let inv2 = self.inv_scale * self.inv_scale;
        let s = 1.0 - rho;
        match self.smoothness {
            Smoothness::C0 => {
                let value = inv2 * s * s;
                if dist == 0.0 {
                    (value, Vector::zeros())
                } else {
                    // r^-3 phi'(rho) d / |d|
                    (value, d * (inv2 * self.inv_scale * -2.0 * s / dist))
                }
            }
            Smoothness::C2 => {
                let s3 = s * s * s;
                let value = inv2 * s3 * s * (4.0 * rho + 1.0);
                // r^-3 * (-20 rho s^3) * d / (rho r)
                (value, d * (-20.0 * inv2 * inv2 * s3))
            }
        }
    }
}
