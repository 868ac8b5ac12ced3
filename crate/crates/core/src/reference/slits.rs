use num_complex::Complex64;

use crate::model::{photon_phase, PhotonGeometry};

use super::{ReferenceKind, ReferenceModel};

/// Expected detector reading for the two-slit photon source.
///
/// Each slit emits half the photons, uniformly in angle within
/// `±half_angle`. The arrival density from slit `k` on the detection line is
/// `½ · l / ((l² + (x − s_k)²) · 2θ)`, and its phase is `2π L_k/λ` along the
/// straight path. The time argument is ignored.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DoubleSlitPaths {
    pub geometry: PhotonGeometry,
    pub half_angle: f64,
}

impl DoubleSlitPaths {
    pub fn new(geometry: PhotonGeometry, half_angle: f64) -> Self {
        Self { geometry, half_angle }
    }

    fn arrival_density(&self, slit: usize, x: f64) -> f64 {
        let l = self.geometry.screen_distance;
        let d = x - self.geometry.slit_position(slit);
        if d.atan2(l).abs() > self.half_angle {
            return 0.0;
        }
        0.5 * l / ((l * l + d * d) * 2.0 * self.half_angle)
    }
}

impl ReferenceModel for DoubleSlitPaths {
    fn kind(&self) -> ReferenceKind {
        ReferenceKind::DoubleSlitPaths
    }

    fn amplitudes(&self, x: f64, _t: f64) -> Vec<Complex64> {
        (0..2)
            .map(|slit| {
                let phase = photon_phase(self.geometry.path_length(slit, x), self.geometry.wavelength);
                Complex64::from_polar(self.arrival_density(slit, x).sqrt(), phase)
            })
            .collect()
    }
}
