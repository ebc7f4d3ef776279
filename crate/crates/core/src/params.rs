use std::fmt;

use serde::{Deserialize, Serialize};

/// Discretization parameters attached to assembled systems, solutions, dumps
/// and error reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterRecord {
    #[serde(rename = "N")]
    pub n_centers: usize,
    #[serde(rename = "M")]
    pub n_multipliers: usize,
    pub kappa: f64,
    #[serde(rename = "h_X")]
    pub fill_distance: f64,
    pub k: f64,
    pub r: f64,
    pub tau: f64,
    pub p: usize,
}

impl fmt::Display for ParameterRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "N={} M={} kappa={} h_X={:.6} k={:.6} r={} tau={} p={}",
            self.n_centers, self.n_multipliers, self.kappa, self.fill_distance, self.k, self.r, self.tau, self.p
        )
    }
}
