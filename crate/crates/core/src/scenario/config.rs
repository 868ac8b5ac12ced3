use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::model::{PhotonGeometry, DEFAULT_FAR_FIELD_RATIO, DEFAULT_PHI0};

use super::ScenarioError;

/// Snapshot times used for every massive-particle scenario unless overridden.
pub const DEFAULT_SNAPSHOTS: [f64; 7] = [0.1, 1.0, 2.0, 4.0, 6.0, 8.0, 10.0];
pub const DEFAULT_BIN_WIDTH: f64 = 0.01;
pub const DEFAULT_VELOCITY: f64 = 5.0;
pub const DEFAULT_PARTICLES: u64 = 1_000_000;
pub const DEFAULT_PHOTONS: u64 = 100_000;
pub const DEFAULT_SEED: u64 = 20_240_521;

const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    SinglePacket,
    TwoPackets,
    Wall,
    DoubleSlit,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 4] = [Self::SinglePacket, Self::TwoPackets, Self::Wall, Self::DoubleSlit];

    pub fn name(self) -> &'static str {
        match self {
            Self::SinglePacket => "single_packet",
            Self::TwoPackets => "two_packets",
            Self::Wall => "wall",
            Self::DoubleSlit => "double_slit",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioKind {
    type Err = ScenarioError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| ScenarioError::UnknownScenario(s.to_string()))
    }
}

/// Bin grid requested by a config.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub delta_x: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SinglePacketParams {
    pub x0: f64,
    pub v0: f64,
    pub sigma_v: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoPacketParams {
    /// Origin of the right-moving source (channel 0).
    pub x1: f64,
    /// Origin of the left-moving source (channel 1).
    pub x2: f64,
    pub v0: f64,
    pub sigma_v: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WallParams {
    pub x0: f64,
    pub v0: f64,
    pub sigma_v: f64,
    pub wall_x: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoubleSlitParams {
    pub wavelength: f64,
    pub slit_separation: f64,
    pub screen_distance: f64,
    pub segment_width: f64,
    pub segments: usize,
    /// Emission half-angle; `None` picks the smallest angle at which each slit
    /// illuminates the whole detector.
    pub half_angle: Option<f64>,
    pub far_field_ratio: f64,
}

impl DoubleSlitParams {
    pub fn geometry(&self) -> Result<PhotonGeometry, ScenarioError> {
        let geometry = PhotonGeometry {
            wavelength: self.wavelength,
            slit_separation: self.slit_separation,
            screen_distance: self.screen_distance,
            min_far_field_ratio: self.far_field_ratio,
        };
        geometry.validate()?;
        Ok(geometry)
    }

    pub fn screen_width(&self) -> f64 {
        self.segment_width * self.segments as f64
    }

    /// Emission half-angle actually used.
    pub fn effective_half_angle(&self) -> f64 {
        self.half_angle.unwrap_or_else(|| {
            let reach = 0.5 * (self.screen_width() + self.slit_separation);
            (reach / self.screen_distance).atan()
        })
    }

    /// Nominal flight time slit → screen, used to label the single snapshot.
    pub fn flight_time(&self) -> f64 {
        self.screen_distance / SPEED_OF_LIGHT
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScenarioParams {
    SinglePacket(SinglePacketParams),
    TwoPackets(TwoPacketParams),
    Wall(WallParams),
    DoubleSlit(DoubleSlitParams),
}

impl ScenarioParams {
    pub fn kind(&self) -> ScenarioKind {
        match self {
            Self::SinglePacket(_) => ScenarioKind::SinglePacket,
            Self::TwoPackets(_) => ScenarioKind::TwoPackets,
            Self::Wall(_) => ScenarioKind::Wall,
            Self::DoubleSlit(_) => ScenarioKind::DoubleSlit,
        }
    }
}

/// Everything needed to run one experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    /// Particle (or photon) budget `𝒩`.
    pub particles: u64,
    pub seed: u64,
    pub snapshots: Vec<f64>,
    pub phi0: f64,
    pub detector: DetectorSpec,
    pub params: ScenarioParams,
}

impl ScenarioConfig {
    pub fn kind(&self) -> ScenarioKind {
        self.params.kind()
    }

    /// Documented defaults for `kind`.
    ///
    /// Source positions are chosen so the packet centers meet (two packets)
    /// or hit the wall at `t = 4`.
    pub fn defaults(kind: ScenarioKind) -> Self {
        let snapshots = DEFAULT_SNAPSHOTS.to_vec();
        let (particles, detector, params) = match kind {
            ScenarioKind::SinglePacket => (
                DEFAULT_PARTICLES,
                DetectorSpec {
                    x_min: -20.0,
                    x_max: 120.0,
                    delta_x: DEFAULT_BIN_WIDTH,
                },
                ScenarioParams::SinglePacket(SinglePacketParams {
                    x0: 0.0,
                    v0: DEFAULT_VELOCITY,
                    sigma_v: 1.0,
                }),
            ),
            ScenarioKind::TwoPackets => (
                DEFAULT_PARTICLES,
                DetectorSpec {
                    x_min: -100.0,
                    x_max: 100.0,
                    delta_x: DEFAULT_BIN_WIDTH,
                },
                ScenarioParams::TwoPackets(TwoPacketParams {
                    x1: -20.0,
                    x2: 20.0,
                    v0: DEFAULT_VELOCITY,
                    sigma_v: 1.0,
                }),
            ),
            ScenarioKind::Wall => (
                DEFAULT_PARTICLES,
                DetectorSpec {
                    x_min: -100.0,
                    x_max: 0.0,
                    delta_x: DEFAULT_BIN_WIDTH,
                },
                ScenarioParams::Wall(WallParams {
                    x0: -20.0,
                    v0: DEFAULT_VELOCITY,
                    sigma_v: 1.0,
                    wall_x: 0.0,
                }),
            ),
            ScenarioKind::DoubleSlit => {
                let params = DoubleSlitParams {
                    wavelength: 842e-9,
                    slit_separation: 250e-6,
                    screen_distance: 0.15,
                    segment_width: 100e-6,
                    segments: 28,
                    half_angle: None,
                    far_field_ratio: DEFAULT_FAR_FIELD_RATIO,
                };
                let half = 0.5 * params.screen_width();
                let cfg = Self {
                    particles: DEFAULT_PHOTONS,
                    seed: DEFAULT_SEED,
                    snapshots: vec![params.flight_time()],
                    phi0: 0.0,
                    detector: DetectorSpec {
                        x_min: -half,
                        x_max: half,
                        delta_x: 1e-6,
                    },
                    params: ScenarioParams::DoubleSlit(params),
                };
                return cfg;
            }
        };
        Self {
            particles,
            seed: DEFAULT_SEED,
            snapshots,
            phi0: DEFAULT_PHI0,
            detector,
            params,
        }
    }

    /// Validates every field, naming the offending key on failure.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        fn positive(key: &'static str, value: f64) -> Result<(), ScenarioError> {
            if value > 0.0 && value.is_finite() {
                Ok(())
            } else {
                Err(ScenarioError::invalid(key, format!("must be positive, got {value}")))
            }
        }
        fn finite(key: &'static str, value: f64) -> Result<(), ScenarioError> {
            if value.is_finite() {
                Ok(())
            } else {
                Err(ScenarioError::invalid(key, format!("must be finite, got {value}")))
            }
        }

        if self.particles == 0 {
            return Err(ScenarioError::invalid("particles", "must be at least 1"));
        }
        finite("phi0", self.phi0)?;
        positive("detector.dx", self.detector.delta_x)?;
        finite("detector.x_min", self.detector.x_min)?;
        finite("detector.x_max", self.detector.x_max)?;
        if self.detector.x_max <= self.detector.x_min {
            return Err(ScenarioError::invalid(
                "detector.x_max",
                format!("must exceed x_min = {}", self.detector.x_min),
            ));
        }
        if self.snapshots.is_empty() {
            return Err(ScenarioError::invalid(
                "snapshots",
                "at least one snapshot time is required",
            ));
        }
        if let Some(t) = self.snapshots.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
            return Err(ScenarioError::invalid(
                "snapshots",
                format!("times must be positive, got {t}"),
            ));
        }

        match &self.params {
            ScenarioParams::SinglePacket(p) => {
                finite("single_packet.x0", p.x0)?;
                finite("single_packet.v0", p.v0)?;
                positive("single_packet.sigma_v", p.sigma_v)?;
            }
            ScenarioParams::TwoPackets(p) => {
                finite("two_packets.x1", p.x1)?;
                finite("two_packets.x2", p.x2)?;
                finite("two_packets.v0", p.v0)?;
                positive("two_packets.sigma_v", p.sigma_v)?;
                if p.x1 >= p.x2 {
                    return Err(ScenarioError::invalid(
                        "two_packets.x2",
                        format!("the left-moving source must start right of x1 = {}", p.x1),
                    ));
                }
            }
            ScenarioParams::Wall(p) => {
                finite("wall.x0", p.x0)?;
                finite("wall.v0", p.v0)?;
                finite("wall.wall_x", p.wall_x)?;
                positive("wall.sigma_v", p.sigma_v)?;
                if p.x0 >= p.wall_x {
                    return Err(ScenarioError::invalid(
                        "wall.x0",
                        format!("the source must start in front of the wall at {}", p.wall_x),
                    ));
                }
                if self.detector.x_max > p.wall_x {
                    return Err(ScenarioError::invalid(
                        "detector.x_max",
                        format!("the detector cannot extend past the wall at {}", p.wall_x),
                    ));
                }
            }
            ScenarioParams::DoubleSlit(p) => {
                positive("double_slit.wavelength", p.wavelength)?;
                positive("double_slit.slit_separation", p.slit_separation)?;
                positive("double_slit.screen_distance", p.screen_distance)?;
                positive("double_slit.segment_width", p.segment_width)?;
                positive("double_slit.far_field_ratio", p.far_field_ratio)?;
                if p.segments == 0 {
                    return Err(ScenarioError::invalid("double_slit.segments", "must be at least 1"));
                }
                if let Some(a) = p.half_angle {
                    if !(a > 0.0 && a < std::f64::consts::FRAC_PI_2) {
                        return Err(ScenarioError::invalid(
                            "double_slit.half_angle",
                            format!("must lie in (0, π/2), got {a}"),
                        ));
                    }
                }
                p.geometry()
                    .map_err(|e| ScenarioError::invalid("double_slit.screen_distance", e.to_string()))?;
                let ratio = p.segment_width / self.detector.delta_x;
                if (ratio - ratio.round()).abs() > 1e-6 || ratio.round() < 1.0 {
                    return Err(ScenarioError::invalid(
                        "detector.dx",
                        format!("pixel width must divide the segment width {}", p.segment_width),
                    ));
                }
            }
        }
        Ok(())
    }
}
