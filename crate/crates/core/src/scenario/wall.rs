use crate::model::{particle_rng, sample_velocity, Particle, VelocityDistribution};
use crate::reference::{ApproxWall, GaussianPacket, ImageWall};

use super::{Hit, ReferenceSet, Scenario, ScenarioConfig, ScenarioError, ScenarioParams, WallParams};

/// One source in front of an infinitely high wall.
///
/// Channel 0 holds particles that have not (yet) hit the wall, channel 1 the
/// reflected ones. Particles emitted away from the wall stay direct forever.
pub struct Wall {
    config: ScenarioConfig,
    params: WallParams,
    velocities: VelocityDistribution,
}

impl Wall {
    pub fn new(config: ScenarioConfig) -> Result<Self, ScenarioError> {
        config.validate()?;
        let ScenarioParams::Wall(params) = config.params else {
            return Err(ScenarioError::invalid("kind", "expected wall parameters"));
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

    pub fn packet(&self) -> GaussianPacket {
        GaussianPacket::minimum_spread(self.params.x0, self.params.v0, self.params.sigma_v)
    }
}

impl Scenario for Wall {
    fn name(&self) -> &'static str {
        "wall"
    }

    fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    fn channels(&self) -> usize {
        2
    }

    fn trace(&self, index: u64, times: &[f64], hits: &mut Vec<Hit>) {
        let p = self.particle(index);
        hits.extend(times.iter().map(|&t| {
            let state = p.evolve_with_wall(t, self.params.wall_x);
            Hit {
                x: state.position,
                phase: state.phase,
                channel: state.channel.index(),
            }
        }));
    }

    fn references(&self) -> ReferenceSet {
        ReferenceSet {
            exact: Some(Box::new(ImageWall::new(self.packet(), self.params.wall_x))),
            approx: Some(Box::new(ApproxWall {
                x0: self.params.x0,
                v0: self.params.v0,
                wall_x: self.params.wall_x,
            })),
        }
    }
}
