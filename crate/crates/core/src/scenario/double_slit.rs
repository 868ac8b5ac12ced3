use rand::Rng;

use crate::model::{particle_rng, photon_phase, PhotonGeometry};
use crate::reference::DoubleSlitPaths;

use super::{DoubleSlitParams, Hit, ReferenceSet, Scenario, ScenarioConfig, ScenarioError, ScenarioParams};

/// Photons leaving two slits at equal rates, isotropic in the horizontal
/// plane, flying straight to a detection line at distance `l`.
///
/// The slit index is the channel. A photon's phase is `2π L/λ` with `L` the
/// distance from its slit to the center of the pixel it lands in.
pub struct DoubleSlit {
    config: ScenarioConfig,
    params: DoubleSlitParams,
    geometry: PhotonGeometry,
    half_angle: f64,
}

impl DoubleSlit {
    pub fn new(config: ScenarioConfig) -> Result<Self, ScenarioError> {
        config.validate()?;
        let ScenarioParams::DoubleSlit(params) = config.params else {
            return Err(ScenarioError::invalid("kind", "expected double_slit parameters"));
        };
        let geometry = params.geometry()?;
        Ok(Self {
            half_angle: params.effective_half_angle(),
            config,
            params,
            geometry,
        })
    }

    pub fn geometry(&self) -> &PhotonGeometry {
        &self.geometry
    }

    pub fn params(&self) -> &DoubleSlitParams {
        &self.params
    }

    pub fn half_angle(&self) -> f64 {
        self.half_angle
    }

    /// Number of pixels aggregated into one segment.
    pub fn pixels_per_segment(&self) -> usize {
        (self.params.segment_width / self.config.detector.delta_x).round() as usize
    }

    /// Slit and screen position of photon `index`.
    pub fn photon(&self, index: u64) -> (usize, f64) {
        let slit = (index % 2) as usize;
        let mut rng = particle_rng(self.config.seed, index);
        let angle = rng.random_range(-self.half_angle..self.half_angle);
        let x = self.geometry.slit_position(slit) + self.geometry.screen_distance * angle.tan();
        (slit, x)
    }
}

impl Scenario for DoubleSlit {
    fn name(&self) -> &'static str {
        "double_slit"
    }

    fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    fn channels(&self) -> usize {
        2
    }

    fn trace(&self, index: u64, times: &[f64], hits: &mut Vec<Hit>) {
        let (slit, x) = self.photon(index);
        let phase = photon_phase(self.geometry.path_length(slit, x), self.geometry.wavelength) + self.config.phi0;
        hits.extend(times.iter().map(|_| Hit {
            x,
            phase,
            channel: slit,
        }));
    }

    fn phase_in_bin(&self, hit: &Hit, bin_center: f64) -> f64 {
        photon_phase(
            self.geometry.path_length(hit.channel, bin_center),
            self.geometry.wavelength,
        ) + self.config.phi0
    }

    fn references(&self) -> ReferenceSet {
        ReferenceSet {
            exact: None,
            approx: Some(Box::new(DoubleSlitPaths::new(self.geometry, self.half_angle))),
        }
    }
}
