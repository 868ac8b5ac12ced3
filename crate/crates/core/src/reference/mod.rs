//! Ground-truth curves and the metrics that compare a simulated profile
//! against them.
//!
//! Every reference implements [`ReferenceModel`] by returning one complex
//! amplitude per arrival channel, scaled so that `|Σ a_k|²` is a density per
//! unit length and per particle, directly comparable to `N̄/(𝒩 δx)`. The
//! incoherent sum `Σ |a_k|²` is the matching prediction for the raw count.

pub mod compare;
pub mod crank_nicolson;
mod packet;
mod slits;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use compare::{
    compare, dominant_period, fringe_visibility, raw_sigma, recorded_sigma, CompareOptions, ComparisonReport,
    Observable,
};
pub use crank_nicolson::{crank_nicolson_evolve, CnError, CnOptions, CrankNicolson, Grid, NumericWall};
pub use packet::{
    density_single_approx, density_two_approx, density_wall_approx, density_wall_image, psi_single_exact,
    psi_two_exact, ApproxSingle, ApproxTwo, ApproxWall, ExactSingle, ExactTwo, GaussianPacket, ImageWall,
    ReferenceError,
};
pub use slits::DoubleSlitPaths;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceKind {
    ExactSingle,
    ExactTwo,
    ApproxSingle,
    ApproxTwo,
    ApproxWall,
    ImageWall,
    NumericWall,
    DoubleSlitPaths,
}

impl ReferenceKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::ExactSingle => "exact_single",
            Self::ExactTwo => "exact_two",
            Self::ApproxSingle => "approx_single",
            Self::ApproxTwo => "approx_two",
            Self::ApproxWall => "approx_wall",
            Self::ImageWall => "image_wall",
            Self::NumericWall => "numeric_wall",
            Self::DoubleSlitPaths => "double_slit_paths",
        }
    }
}

pub trait ReferenceModel: Send + Sync {
    fn kind(&self) -> ReferenceKind;

    /// Per-channel amplitudes at `(x, t)`.
    fn amplitudes(&self, x: f64, t: f64) -> Vec<Complex64>;

    /// Coherent density `|Σ_k a_k|²`.
    fn density(&self, x: f64, t: f64) -> f64 {
        self.amplitudes(x, t).iter().sum::<Complex64>().norm_sqr()
    }

    /// Fringe-free density `Σ_k |a_k|²`.
    fn incoherent_density(&self, x: f64, t: f64) -> f64 {
        self.amplitudes(x, t).iter().map(|a| a.norm_sqr()).sum()
    }

    /// Samples the model at `centers`.
    fn profile(&self, centers: &[f64], t: f64) -> ReferenceProfile {
        ReferenceProfile {
            kind: self.kind(),
            time: t,
            centers: centers.to_vec(),
            amplitudes: centers.iter().map(|&x| self.amplitudes(x, t)).collect(),
        }
    }
}

/// A reference model evaluated on a bin grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceProfile {
    pub kind: ReferenceKind,
    pub time: f64,
    pub centers: Vec<f64>,
    pub amplitudes: Vec<Vec<Complex64>>,
}

impl ReferenceProfile {
    pub fn density(&self) -> Vec<f64> {
        self.amplitudes
            .iter()
            .map(|a| a.iter().sum::<Complex64>().norm_sqr())
            .collect()
    }

    pub fn incoherent_density(&self) -> Vec<f64> {
        self.amplitudes
            .iter()
            .map(|a| a.iter().map(|c| c.norm_sqr()).sum())
            .collect()
    }
}
