//! Particles, velocity sampling and phase-carrying kinematics.
//!
//! A massive particle keeps its velocity for its whole life and picks up the
//! action phase `∫ ½ v² dt` (in internal units). Reflection off an infinitely
//! high wall flips the velocity and adds a phase jump of `π`. Photons carry
//! `2π l / λ` along a straight ray.

use std::f64::consts::{FRAC_PI_4, PI, TAU};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

/// Common initial phase of every emitted particle.
pub const DEFAULT_PHI0: f64 = -FRAC_PI_4;

/// Smallest screen distance / slit separation ratio accepted for photons.
pub const DEFAULT_FAR_FIELD_RATIO: f64 = 100.0;

/// Random stream for particle `index` under `seed`.
///
/// The stream is addressed by index rather than shared, so any partition of
/// the index range over workers reproduces the serial sample set.
pub fn particle_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VelocityDistribution {
    pub mean: f64,
    pub sigma: f64,
    /// Fraction of the particle budget drawn from this source.
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("velocity dispersion must be positive and finite, got {0}")]
    Dispersion(f64),
    #[error("velocity mean must be finite, got {0}")]
    Mean(f64),
    #[error("source weights must be positive and sum to 1, got {0:?}")]
    Weights(Vec<f64>),
    #[error("photon geometry: {0}")]
    Photon(String),
}

impl VelocityDistribution {
    pub fn new(mean: f64, sigma: f64, weight: f64) -> Result<Self, ModelError> {
        if !mean.is_finite() {
            return Err(ModelError::Mean(mean));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(ModelError::Dispersion(sigma));
        }
        Ok(Self { mean, sigma, weight })
    }

    /// Checks that a set of sources shares the budget completely.
    pub fn validate_weights(sources: &[VelocityDistribution]) -> Result<(), ModelError> {
        let weights: Vec<f64> = sources.iter().map(|s| s.weight).collect();
        let total: f64 = weights.iter().sum();
        if weights.iter().any(|w| !(*w > 0.0)) || (total - 1.0).abs() > 1e-12 {
            return Err(ModelError::Weights(weights));
        }
        Ok(())
    }
}

/// Draws one Gaussian velocity from `dist`.
pub fn sample_velocity<R: Rng + ?Sized>(dist: &VelocityDistribution, rng: &mut R) -> f64 {
    // Normal::new only fails for a non-finite sigma, which the constructor rejects.
    Normal::new(dist.mean, dist.sigma)
        .expect("validated distribution")
        .sample(rng)
}

/// Arrival channel of a particle in the wall experiment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum WallChannel {
    Direct = 0,
    Reflected = 1,
}

impl WallChannel {
    pub fn index(self) -> usize {
        self as usize
    }
}

/// State of a particle observed at time `t` in front of a wall.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WallState {
    pub position: f64,
    pub phase: f64,
    pub channel: WallChannel,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Particle {
    pub x_origin: f64,
    pub velocity: f64,
    pub phi0: f64,
    /// Provenance tag, `< K` for the owning scenario.
    pub channel: usize,
    pub reflected: bool,
}

impl Particle {
    pub fn new(x_origin: f64, velocity: f64, phi0: f64, channel: usize) -> Self {
        Self {
            x_origin,
            velocity,
            phi0,
            channel,
            reflected: false,
        }
    }

    pub fn position_free(&self, t: f64) -> f64 {
        self.x_origin + self.velocity * t
    }

    /// Action phase `½ v² t + φ₀`; at `t = 0` this is just `φ₀`.
    pub fn phase_free(&self, t: f64) -> f64 {
        0.5 * self.velocity * self.velocity * t + self.phi0
    }

    /// Evolves the particle in front of an infinitely high wall at `wall_x`.
    ///
    /// A particle that has reached the wall by `t` is mirrored back, keeps its
    /// speed (so the kinetic action is unchanged) and gains a phase of `π`.
    /// The returned position is always strictly below `wall_x`; a particle
    /// sitting exactly on the wall is reported in the reflected channel one
    /// ulp in front of it, which puts it in the bin adjacent to the wall.
    pub fn evolve_with_wall(&self, t: f64, wall_x: f64) -> WallState {
        debug_assert!(self.x_origin < wall_x);
        let free = self.position_free(t);
        let action = self.phase_free(t);
        if self.velocity > 0.0 && free >= wall_x {
            let mut position = 2.0 * wall_x - free;
            if position >= wall_x {
                position = wall_x.next_down();
            }
            WallState {
                position,
                phase: action + PI,
                channel: WallChannel::Reflected,
            }
        } else {
            WallState {
                position: free,
                phase: action,
                channel: WallChannel::Direct,
            }
        }
    }
}

/// Phase `2π l / λ` accumulated by a photon along a straight path.
pub fn photon_phase(path_length: f64, wavelength: f64) -> f64 {
    TAU * path_length / wavelength
}

/// Double-slit geometry in SI units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhotonGeometry {
    pub wavelength: f64,
    pub slit_separation: f64,
    pub screen_distance: f64,
    /// Guard on `screen_distance / slit_separation`.
    pub min_far_field_ratio: f64,
}

impl PhotonGeometry {
    pub fn new(wavelength: f64, slit_separation: f64, screen_distance: f64) -> Result<Self, ModelError> {
        let geometry = Self {
            wavelength,
            slit_separation,
            screen_distance,
            min_far_field_ratio: DEFAULT_FAR_FIELD_RATIO,
        };
        geometry.validate()?;
        Ok(geometry)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for (name, value) in [
            ("wavelength", self.wavelength),
            ("slit_separation", self.slit_separation),
            ("screen_distance", self.screen_distance),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(ModelError::Photon(format!("{name} must be positive, got {value}")));
            }
        }
        let ratio = self.screen_distance / self.slit_separation;
        if ratio < self.min_far_field_ratio {
            return Err(ModelError::Photon(format!(
                "screen_distance/slit_separation = {ratio} is below the far-field guard {}",
                self.min_far_field_ratio
            )));
        }
        Ok(())
    }

    /// Transverse position of slit `slit` (0 or 1) on the slit screen.
    pub fn slit_position(&self, slit: usize) -> f64 {
        if slit == 0 {
            -0.5 * self.slit_separation
        } else {
            0.5 * self.slit_separation
        }
    }

    /// Straight-line distance from slit `slit` to screen position `x`.
    pub fn path_length(&self, slit: usize, x: f64) -> f64 {
        (x - self.slit_position(slit)).hypot(self.screen_distance)
    }

    /// Far-field fringe spacing `λ l / D`.
    pub fn fringe_spacing(&self) -> f64 {
        self.wavelength * self.screen_distance / self.slit_separation
    }
}
