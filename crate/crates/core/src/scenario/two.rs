use crate::model::{particle_rng, sample_velocity, Particle, VelocityDistribution};
use crate::reference::{ApproxTwo, ExactTwo, GaussianPacket};

use super::{Hit, ReferenceSet, Scenario, ScenarioConfig, ScenarioError, ScenarioParams, TwoPacketParams};

/// Two sources moving toward each other, sharing the budget equally.
///
/// Even indices belong to the right-mover from `x1` (channel 0), odd indices
/// to the left-mover from `x2` (channel 1), so every prefix of the particle
/// sequence is split as evenly as possible.
pub struct TwoPackets {
    config: ScenarioConfig,
    params: TwoPacketParams,
    sources: [VelocityDistribution; 2],
}

impl TwoPackets {
    pub fn new(config: ScenarioConfig) -> Result<Self, ScenarioError> {
        config.validate()?;
        let ScenarioParams::TwoPackets(params) = config.params else {
            return Err(ScenarioError::invalid("kind", "expected two_packets parameters"));
        };
        let sources = [
            VelocityDistribution::new(params.v0, params.sigma_v, 0.5)?,
            VelocityDistribution::new(-params.v0, params.sigma_v, 0.5)?,
        ];
        VelocityDistribution::validate_weights(&sources)?;
        Ok(Self {
            config,
            params,
            sources,
        })
    }

    pub fn particle(&self, index: u64) -> Particle {
        let channel = (index % 2) as usize;
        let origin = if channel == 0 { self.params.x1 } else { self.params.x2 };
        let mut rng = particle_rng(self.config.seed, index);
        let v = sample_velocity(&self.sources[channel], &mut rng);
        Particle::new(origin, v, self.config.phi0, channel)
    }

    pub fn packets(&self) -> [GaussianPacket; 2] {
        let p = &self.params;
        [
            GaussianPacket::minimum_spread(p.x1, p.v0, p.sigma_v),
            GaussianPacket::minimum_spread(p.x2, -p.v0, p.sigma_v),
        ]
    }
}

impl Scenario for TwoPackets {
    fn name(&self) -> &'static str {
        "two_packets"
    }

    fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    fn channels(&self) -> usize {
        2
    }

    fn trace(&self, index: u64, times: &[f64], hits: &mut Vec<Hit>) {
        let p = self.particle(index);
        hits.extend(times.iter().map(|&t| Hit {
            x: p.position_free(t),
            phase: p.phase_free(t),
            channel: p.channel,
        }));
    }

    fn references(&self) -> ReferenceSet {
        let [a, b] = self.packets();
        ReferenceSet {
            exact: Some(Box::new(ExactTwo::new(a, b))),
            approx: Some(Box::new(ApproxTwo {
                x1: self.params.x1,
                x2: self.params.x2,
                v0: self.params.v0,
            })),
        }
    }
}
