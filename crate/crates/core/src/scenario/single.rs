use crate::model::{particle_rng, sample_velocity, Particle, VelocityDistribution};
use crate::reference::{ApproxSingle, ExactSingle, GaussianPacket};

use super::{Hit, ReferenceSet, Scenario, ScenarioConfig, ScenarioError, ScenarioParams, SinglePacketParams};

/// All particles leave `x0` at `t = 0` with Gaussian velocities around `v0`.
pub struct SinglePacket {
    config: ScenarioConfig,
    params: SinglePacketParams,
    velocities: VelocityDistribution,
}

impl SinglePacket {
    pub fn new(config: ScenarioConfig) -> Result<Self, ScenarioError> {
        config.validate()?;
        let ScenarioParams::SinglePacket(params) = config.params else {
            return Err(ScenarioError::invalid("kind", "expected single_packet parameters"));
        };
        let velocities = VelocityDistribution::new(params.v0, params.sigma_v, 1.0)?;
        Ok(Self {
            config,
            params,
            velocities,
        })
    }

    pub fn particle(&self, index: u64) -> Particle {
        let mut rng = particle_rng(self.config.seed, index);
        let v = sample_velocity(&self.velocities, &mut rng);
        Particle::new(self.params.x0, v, self.config.phi0, 0)
    }

    /// Minimum-spread packet matching the velocity spread.
    pub fn packet(&self) -> GaussianPacket {
        GaussianPacket::minimum_spread(self.params.x0, self.params.v0, self.params.sigma_v)
    }
}

impl Scenario for SinglePacket {
    fn name(&self) -> &'static str {
        "single_packet"
    }

    fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    fn channels(&self) -> usize {
        1
    }

    fn trace(&self, index: u64, times: &[f64], hits: &mut Vec<Hit>) {
        let p = self.particle(index);
        hits.extend(times.iter().map(|&t| Hit {
            x: p.position_free(t),
            phase: p.phase_free(t),
            channel: 0,
        }));
    }

    fn references(&self) -> ReferenceSet {
        ReferenceSet {
            exact: Some(Box::new(ExactSingle(self.packet()))),
            approx: Some(Box::new(ApproxSingle {
                x0: self.params.x0,
                v0: self.params.v0,
            })),
        }
    }
}
