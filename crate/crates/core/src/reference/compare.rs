//! Residual statistics between a simulated profile and a reference.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::detector::DensityProfile;

use super::{ReferenceKind, ReferenceProfile};

/// Which simulated column is compared.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    /// `N̄/(𝒩δx)` against the coherent reference `|Σ a_k|²`.
    Recorded,
    /// `N/(𝒩δx)` against the incoherent reference `Σ |a_k|²`.
    Raw,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareOptions {
    pub observable: Observable,
    /// Core bins are those where the reference exceeds this fraction of its peak.
    pub core_fraction: f64,
    pub z_threshold: f64,
    /// Window `[lo, hi]` for the fringe visibility.
    pub visibility_window: Option<(f64, f64)>,
}

impl Default for CompareOptions {
    fn default() -> Self {
        Self {
            observable: Observable::Recorded,
            core_fraction: 0.01,
            z_threshold: 3.0,
            visibility_window: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub reference: ReferenceKind,
    pub observable: Observable,
    pub snapshot_time: f64,
    pub core_bins: usize,
    /// Simulated minus reference density, every bin.
    pub residuals: Vec<f64>,
    /// Per-bin z-score, every bin; NaN where the expected spread is zero.
    pub z_scores: Vec<f64>,
    /// Norms and tallies below are restricted to the core.
    pub linf: f64,
    pub l2: f64,
    pub relative_l2: f64,
    pub chi2: f64,
    pub max_abs_z: f64,
    pub z_exceed_fraction: f64,
    pub visibility_simulated: Option<f64>,
    pub visibility_reference: Option<f64>,
}

impl ComparisonReport {
    pub fn chi2_per_bin(&self) -> f64 {
        self.chi2 / self.core_bins.max(1) as f64
    }
}

/// Standard deviation of the recorded count `N̄ = |Σ_k √N_k u_k|²` when the
/// channel counts are independent Poisson variables with means
/// `λ_k = scale·|a_k|²` and `u_k` is the phase of `a_k`.
///
/// First-order propagation gives `Σ_k (Re(Ā u_k))²` with `A = Σ √λ_k u_k`.
/// With several channels the second-order term keeps the spread from
/// collapsing at interference nodes; it contributes `K_eff²/8`, where `K_eff`
/// counts the populated channels. A single channel gives `√λ`.
pub fn recorded_sigma(amplitudes: &[Complex64], scale: f64) -> f64 {
    let root = scale.sqrt();
    let total: Complex64 = amplitudes.iter().sum::<Complex64>() * root;
    let mut variance = 0.0;
    let mut populated = 0.0;
    for a in amplitudes {
        let modulus = a.norm();
        if modulus == 0.0 {
            continue;
        }
        let u = a / modulus;
        variance += (total.conj() * u).re.powi(2);
        populated += (scale * modulus * modulus).min(1.0);
    }
    if amplitudes.len() > 1 {
        variance += populated * populated / 8.0;
    }
    variance.sqrt()
}

/// Poisson spread of the raw count.
pub fn raw_sigma(amplitudes: &[Complex64], scale: f64) -> f64 {
    (scale * amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>()).sqrt()
}

/// Compares `simulated` against `reference` bin by bin.
///
/// # Panics
///
/// If the two profiles do not share a bin grid.
pub fn compare(simulated: &DensityProfile, reference: &ReferenceProfile, options: &CompareOptions) -> ComparisonReport {
    assert_eq!(
        simulated.rows.len(),
        reference.centers.len(),
        "profiles must share a bin grid"
    );
    let tolerance = 1e-9 * simulated.delta_x;
    assert!(
        simulated
            .rows
            .iter()
            .zip(&reference.centers)
            .all(|(r, &c)| (r.center - c).abs() <= tolerance),
        "profiles must share a bin grid"
    );

    let spread: fn(&[Complex64], f64) -> f64;
    let (sim, expected) = match options.observable {
        Observable::Recorded => {
            spread = recorded_sigma;
            (simulated.recorded_density(), reference.density())
        }
        Observable::Raw => {
            spread = raw_sigma;
            (simulated.raw_density(), reference.incoherent_density())
        }
    };
    let scale = simulated.total_particles as f64 * simulated.delta_x;
    let peak = expected.iter().copied().fold(0.0, f64::max);
    let threshold = options.core_fraction * peak;

    let mut residuals = Vec::with_capacity(sim.len());
    let mut z_scores = Vec::with_capacity(sim.len());
    let (mut core_bins, mut exceed) = (0usize, 0usize);
    let (mut linf, mut sq, mut ref_sq, mut chi2, mut max_abs_z) = (0.0f64, 0.0, 0.0, 0.0, 0.0f64);
    for i in 0..sim.len() {
        let r = sim[i] - expected[i];
        let sigma = spread(&reference.amplitudes[i], scale) / scale;
        let z = if sigma > 0.0 { r / sigma } else { f64::NAN };
        residuals.push(r);
        z_scores.push(z);
        if expected[i] > threshold {
            core_bins += 1;
            linf = linf.max(r.abs());
            sq += r * r;
            ref_sq += expected[i] * expected[i];
            if z.is_finite() {
                chi2 += z * z;
                max_abs_z = max_abs_z.max(z.abs());
            }
            if z.abs() > options.z_threshold {
                exceed += 1;
            }
        }
    }

    let window = options.visibility_window;
    ComparisonReport {
        reference: reference.kind,
        observable: options.observable,
        snapshot_time: simulated.snapshot_time,
        core_bins,
        residuals,
        z_scores,
        linf,
        l2: (sq * simulated.delta_x).sqrt(),
        relative_l2: if ref_sq > 0.0 { (sq / ref_sq).sqrt() } else { 0.0 },
        chi2,
        max_abs_z,
        z_exceed_fraction: if core_bins > 0 {
            exceed as f64 / core_bins as f64
        } else {
            0.0
        },
        visibility_simulated: window.and_then(|w| fringe_visibility(&reference.centers, &sim, w)),
        visibility_reference: window.and_then(|w| fringe_visibility(&reference.centers, &expected, w)),
    }
}

/// `(max − min)/(max + min)` of `values` over bins whose center lies in
/// `[lo, hi]`. `None` if the window is empty or the profile vanishes there.
pub fn fringe_visibility(centers: &[f64], values: &[f64], (lo, hi): (f64, f64)) -> Option<f64> {
    let (mut max, mut min, mut any) = (f64::NEG_INFINITY, f64::INFINITY, false);
    for (&x, &v) in centers.iter().zip(values) {
        if x >= lo && x <= hi {
            max = max.max(v);
            min = min.min(v);
            any = true;
        }
    }
    (any && max + min > 0.0).then(|| (max - min) / (max + min))
}

/// Variance explained by the least-squares fit `m + c·cos kx + s·sin kx`.
fn explained_variance(centers: &[f64], values: &[f64], period: f64) -> f64 {
    let k = TAU / period;
    let mut m = [[0.0f64; 3]; 3];
    let mut rhs = [0.0f64; 3];
    let mut sum_v = 0.0;
    for (&x, &v) in centers.iter().zip(values) {
        let (sin, cos) = (k * x).sin_cos();
        let basis = [1.0, cos, sin];
        for i in 0..3 {
            rhs[i] += basis[i] * v;
            for j in 0..3 {
                m[i][j] += basis[i] * basis[j];
            }
        }
        sum_v += v;
    }
    let Some(beta) = solve3(m, rhs) else {
        return 0.0;
    };
    beta.iter().zip(&rhs).map(|(b, r)| b * r).sum::<f64>() - sum_v * sum_v / centers.len() as f64
}

fn solve3(mut m: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[pivot][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            for k in col..3 {
                m[row][k] -= f * m[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let tail: f64 = (row + 1..3).map(|k| m[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / m[row][row];
    }
    Some(x)
}

/// Period in `[min_period, max_period]` of the sinusoid that best matches
/// the mean-subtracted profile.
pub fn dominant_period(centers: &[f64], values: &[f64], min_period: f64, max_period: f64) -> Option<f64> {
    if centers.len() < 3 || !(min_period > 0.0 && max_period > min_period) {
        return None;
    }
    let power = |p: f64| explained_variance(centers, values, p);
    let steps = 2000;
    let ratio = (max_period / min_period).powf(1.0 / steps as f64);
    let (mut best, mut best_power) = (min_period, f64::NEG_INFINITY);
    for i in 0..=steps {
        let p = min_period * ratio.powi(i);
        let w = power(p);
        if w > best_power {
            best = p;
            best_power = w;
        }
    }
    if !(best_power > 1e-12 * values.iter().map(|v| v * v).sum::<f64>()) {
        return None;
    }
    // golden-section refinement inside the bracketing scan cells
    let (mut a, mut b) = ((best / ratio).max(min_period), (best * ratio).min(max_period));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..60 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if power(c) > power(d) {
            b = d;
        } else {
            a = c;
        }
    }
    Some(0.5 * (a + b))
}
