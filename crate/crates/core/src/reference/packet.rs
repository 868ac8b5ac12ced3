use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};

use num_complex::Complex64;

use crate::model::DEFAULT_PHI0;

use super::{ReferenceKind, ReferenceModel};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ReferenceError {
    #[error("initial width must be positive and finite, got {0}")]
    Width(f64),
    #[error("x = {x} lies beyond the wall at {wall}")]
    Domain { x: f64, wall: f64 },
}

/// Free minimum-uncertainty Gaussian packet in `ħ/m = 1` units.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianPacket {
    pub x0: f64,
    pub v0: f64,
    pub sigma_x0: f64,
}

impl GaussianPacket {
    pub fn new(x0: f64, v0: f64, sigma_x0: f64) -> Result<Self, ReferenceError> {
        if !(sigma_x0 > 0.0 && sigma_x0.is_finite()) {
            return Err(ReferenceError::Width(sigma_x0));
        }
        Ok(Self { x0, v0, sigma_x0 })
    }

    /// Packet whose width matches a velocity spread `sigma_v`: `σ_x0 = 1/(2σ_v)`.
    pub fn minimum_spread(x0: f64, v0: f64, sigma_v: f64) -> Self {
        Self {
            x0,
            v0,
            sigma_x0: 0.5 / sigma_v,
        }
    }

    pub fn sigma_x(&self, t: f64) -> f64 {
        let s2 = self.sigma_x0 * self.sigma_x0;
        (s2 + t * t / (4.0 * s2)).sqrt()
    }

    /// Closed-form `|ψ|²`: a Gaussian of width `σ_x(t)` around `x0 + v0 t`.
    pub fn density(&self, x: f64, t: f64) -> f64 {
        let sx = self.sigma_x(t);
        let d = x - self.x0 - self.v0 * t;
        (-d * d / (2.0 * sx * sx)).exp() / (TAU.sqrt() * sx)
    }

    pub fn psi(&self, x: f64, t: f64) -> Complex64 {
        psi_displaced(self.sigma_x0, x - self.x0, self.v0, t)
    }
}

/// Packet amplitude as a function of the displacement `d = x − x0` only.
///
/// Writing it this way makes an odd image pair cancel bit for bit on the
/// mirror plane.
fn psi_displaced(sigma: f64, d: f64, v: f64, t: f64) -> Complex64 {
    let s2 = sigma * sigma;
    let a = Complex64::new(s2, 0.5 * t);
    let prefactor = (TAU * s2).powf(-0.25) * (Complex64::from(s2) / a).sqrt();
    let u = d - v * t;
    let exponent = -Complex64::from(u * u) / (4.0 * a) + Complex64::i() * (v * d - 0.5 * v * v * t);
    prefactor * exponent.exp()
}

pub fn psi_single_exact(x: f64, t: f64, packet: &GaussianPacket) -> Complex64 {
    packet.psi(x, t)
}

/// Large-time recorded count of a single source in a bin of width `delta_x`.
pub fn density_single_approx(x: f64, t: f64, x0: f64, v0: f64, delta_x: f64) -> f64 {
    let d = x - x0 - v0 * t;
    delta_x / (TAU.sqrt() * t) * (-d * d / (2.0 * t * t)).exp()
}

pub fn psi_two_exact(x: f64, t: f64, a: &GaussianPacket, b: &GaussianPacket) -> Complex64 {
    (a.psi(x, t) + b.psi(x, t)) * FRAC_1_SQRT_2
}

/// Large-time stream amplitude per `√δx`: a source at `x0` whose particles
/// reach `x` with velocity `(x − x0)/t`, drawn around `v_mean`.
fn stream(x: f64, t: f64, x0: f64, v_mean: f64) -> Complex64 {
    let d = x - x0;
    let u = d - v_mean * t;
    let modulus = (2.0 * PI).powf(-0.25) / t.sqrt() * (-u * u / (4.0 * t * t)).exp();
    Complex64::from_polar(modulus, d * d / (2.0 * t) + DEFAULT_PHI0)
}

/// Large-time recorded count for two counter-propagating sources sharing one
/// budget.
pub fn density_two_approx(x: f64, t: f64, x1: f64, x2: f64, v0: f64, delta_x: f64) -> f64 {
    delta_x * ApproxTwo { x1, x2, v0 }.density(x, t)
}

/// Large-time recorded count in front of a hard wall. Zero on the wall.
pub fn density_wall_approx(x: f64, t: f64, x0: f64, v0: f64, wall_x: f64, delta_x: f64) -> Result<f64, ReferenceError> {
    if x > wall_x {
        return Err(ReferenceError::Domain { x, wall: wall_x });
    }
    Ok(delta_x * ApproxWall { x0, v0, wall_x }.density(x, t))
}

/// Exact density in front of a hard wall by the method of images.
pub fn density_wall_image(x: f64, t: f64, packet: &GaussianPacket, wall_x: f64) -> Result<f64, ReferenceError> {
    if x > wall_x {
        return Err(ReferenceError::Domain { x, wall: wall_x });
    }
    Ok(ImageWall::new(*packet, wall_x).density(x, t))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExactSingle(pub GaussianPacket);

impl ReferenceModel for ExactSingle {
    fn kind(&self) -> ReferenceKind {
        ReferenceKind::ExactSingle
    }

    fn amplitudes(&self, x: f64, t: f64) -> Vec<Complex64> {
        vec![self.0.psi(x, t)]
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ApproxSingle {
    pub x0: f64,
    pub v0: f64,
}

impl ReferenceModel for ApproxSingle {
    fn kind(&self) -> ReferenceKind {
        ReferenceKind::ApproxSingle
    }

    fn amplitudes(&self, x: f64, t: f64) -> Vec<Complex64> {
        vec![stream(x, t, self.x0, self.v0)]
    }
}

/// Equal-weight superposition of two packets; each channel carries `ψ_k/√2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExactTwo {
    pub a: GaussianPacket,
    pub b: GaussianPacket,
}

impl ExactTwo {
    pub fn new(a: GaussianPacket, b: GaussianPacket) -> Self {
        Self { a, b }
    }
}

impl ReferenceModel for ExactTwo {
    fn kind(&self) -> ReferenceKind {
        ReferenceKind::ExactTwo
    }

    fn amplitudes(&self, x: f64, t: f64) -> Vec<Complex64> {
        vec![self.a.psi(x, t) * FRAC_1_SQRT_2, self.b.psi(x, t) * FRAC_1_SQRT_2]
    }
}

/// Right-mover from `x1` and left-mover from `x2`, each with half the budget.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ApproxTwo {
    pub x1: f64,
    pub x2: f64,
    pub v0: f64,
}

impl ReferenceModel for ApproxTwo {
    fn kind(&self) -> ReferenceKind {
        ReferenceKind::ApproxTwo
    }

    fn amplitudes(&self, x: f64, t: f64) -> Vec<Complex64> {
        vec![
            stream(x, t, self.x1, self.v0) * FRAC_1_SQRT_2,
            stream(x, t, self.x2, -self.v0) * FRAC_1_SQRT_2,
        ]
    }
}

/// Packet in front of a hard wall, as the odd combination of the packet and
/// its mirror image, renormalized to the half-line.
///
/// Channels are direct and reflected. Beyond the wall both vanish.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ImageWall {
    pub packet: GaussianPacket,
    pub wall_x: f64,
    norm: f64,
}

impl ImageWall {
    pub fn new(packet: GaussianPacket, wall_x: f64) -> Self {
        let s2 = packet.sigma_x0 * packet.sigma_x0;
        let d0 = packet.x0 - wall_x;
        let overlap = (-d0 * d0 / (2.0 * s2) - 2.0 * s2 * packet.v0 * packet.v0).exp();
        Self {
            packet,
            wall_x,
            norm: 1.0 - overlap,
        }
    }

    /// Probability that the unconstrained packet pair places on the physical side.
    pub fn norm(&self) -> f64 {
        self.norm
    }
}

impl ReferenceModel for ImageWall {
    fn kind(&self) -> ReferenceKind {
        ReferenceKind::ImageWall
    }

    fn amplitudes(&self, x: f64, t: f64) -> Vec<Complex64> {
        if x > self.wall_x {
            return vec![Complex64::ZERO; 2];
        }
        let p = &self.packet;
        let scale = self.norm.sqrt().recip();
        let y = x - self.wall_x;
        let y0 = p.x0 - self.wall_x;
        vec![
            psi_displaced(p.sigma_x0, y - y0, p.v0, t) * scale,
            -psi_displaced(p.sigma_x0, y + y0, -p.v0, t) * scale,
        ]
    }
}

/// Large-time direct and reflected streams with the `π` jump on reflection.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ApproxWall {
    pub x0: f64,
    pub v0: f64,
    pub wall_x: f64,
}

impl ReferenceModel for ApproxWall {
    fn kind(&self) -> ReferenceKind {
        ReferenceKind::ApproxWall
    }

    fn amplitudes(&self, x: f64, t: f64) -> Vec<Complex64> {
        if x > self.wall_x {
            return vec![Complex64::ZERO; 2];
        }
        let y = x - self.wall_x;
        let y0 = self.x0 - self.wall_x;
        vec![stream(y, t, y0, self.v0), -stream(-y, t, y0, self.v0)]
    }
}
