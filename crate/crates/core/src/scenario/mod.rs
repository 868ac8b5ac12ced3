//! Registered experiments and the runner that drives them.
//!
//! Every experiment implements [`Scenario`]: given a particle index it
//! samples that particle from its own random stream and reports where it is,
//! which phase it carries and which channel it belongs to at each requested
//! time. Scenarios are looked up by name in [`REGISTRY`], so the CLI can
//! pick one from a config file without knowing the concrete types.

mod config;
mod double_slit;
mod runner;
mod single;
mod two;
mod wall;

pub use config::{
    DetectorSpec, DoubleSlitParams, ScenarioConfig, ScenarioKind, ScenarioParams, SinglePacketParams, TwoPacketParams,
    WallParams, DEFAULT_BIN_WIDTH, DEFAULT_PARTICLES, DEFAULT_PHOTONS, DEFAULT_SEED, DEFAULT_SNAPSHOTS,
};
pub use double_slit::DoubleSlit;
pub use runner::{
    run, run_layouts, sweep_bin_size, sweep_buildup, Checkpoint, LayoutRun, RunOptions, RunOutput, CHUNK,
};
pub use single::SinglePacket;
pub use two::TwoPackets;
pub use wall::Wall;

use crate::detector::{DetectorError, DetectorLayout};
use crate::model::ModelError;
use crate::reference::ReferenceModel;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScenarioError {
    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
    #[error("invalid `{key}`: {message}")]
    Invalid { key: &'static str, message: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Detector(#[from] DetectorError),
    #[error("checkpoints: {0}")]
    Checkpoints(String),
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

impl ScenarioError {
    pub fn invalid(key: &'static str, message: impl Into<String>) -> Self {
        Self::Invalid {
            key,
            message: message.into(),
        }
    }
}

/// Where one particle is at one time, and what it carries.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hit {
    pub x: f64,
    pub phase: f64,
    pub channel: usize,
}

/// Reference curves a scenario can be compared against.
#[derive(Default)]
pub struct ReferenceSet {
    pub exact: Option<Box<dyn ReferenceModel>>,
    pub approx: Option<Box<dyn ReferenceModel>>,
}

pub trait Scenario: Send + Sync {
    fn name(&self) -> &'static str;

    fn config(&self) -> &ScenarioConfig;

    /// Number of arrival channels `K`.
    fn channels(&self) -> usize;

    /// Detector grid for the configured bin width.
    fn layout(&self) -> DetectorLayout {
        let geometry = self.config().detector;
        DetectorLayout::new(geometry.x_min, geometry.x_max, geometry.delta_x, self.channels())
            .expect("config validated before construction")
    }

    /// Samples particle `index` and pushes one [`Hit`] per entry of `times`.
    fn trace(&self, index: u64, times: &[f64], hits: &mut Vec<Hit>);

    /// Phase registered for `hit` when it lands in the bin centered at
    /// `bin_center`. Massive particles keep their own phase.
    fn phase_in_bin(&self, hit: &Hit, _bin_center: f64) -> f64 {
        hit.phase
    }

    fn references(&self) -> ReferenceSet;
}

type Builder = fn(&ScenarioConfig) -> Result<Box<dyn Scenario>, ScenarioError>;

/// A named entry in the scenario registry.
pub struct Registration {
    pub kind: ScenarioKind,
    pub summary: &'static str,
    pub build: Builder,
}

pub static REGISTRY: &[Registration] = &[
    Registration {
        kind: ScenarioKind::SinglePacket,
        summary: "one Gaussian source, free flight",
        build: |cfg| Ok(Box::new(SinglePacket::new(cfg.clone())?)),
    },
    Registration {
        kind: ScenarioKind::TwoPackets,
        summary: "two counter-propagating Gaussian sources sharing the budget",
        build: |cfg| Ok(Box::new(TwoPackets::new(cfg.clone())?)),
    },
    Registration {
        kind: ScenarioKind::Wall,
        summary: "one Gaussian source reflecting off a hard wall",
        build: |cfg| Ok(Box::new(Wall::new(cfg.clone())?)),
    },
    Registration {
        kind: ScenarioKind::DoubleSlit,
        summary: "photons from two slits on straight rays to a pixel screen",
        build: |cfg| Ok(Box::new(DoubleSlit::new(cfg.clone())?)),
    },
];

pub fn lookup(name: &str) -> Option<&'static Registration> {
    REGISTRY.iter().find(|r| r.kind.name() == name)
}

/// Builds the registered scenario matching `cfg`'s kind.
pub fn build(cfg: &ScenarioConfig) -> Result<Box<dyn Scenario>, ScenarioError> {
    let name = cfg.kind().name();
    let registration = lookup(name).ok_or_else(|| ScenarioError::UnknownScenario(name.to_string()))?;
    (registration.build)(cfg)
}
