//! TOML run files.
//!
//! ```toml
//! kind = "two_packets"
//! particles = 2_000_000
//! seed = 7
//! snapshots = [4.0]
//!
//! [detector]
//! x_min = -100.0
//! x_max = 100.0
//! dx = 0.01
//!
//! [two_packets]
//! x1 = -20.0
//!
//! [sweep]
//! bin_widths = [0.01, 0.4]
//! ```
//!
//! Only `kind` is required. Everything else falls back to
//! [`ScenarioConfig::defaults`]. Unknown keys, and parameter sections that
//! belong to a different kind, are rejected. Errors carry the line of the
//! offending key when the key was present in the text.

use std::collections::HashMap;
use std::ops::Range;

use phasecount::scenario::{ScenarioConfig, ScenarioError, ScenarioKind, ScenarioParams};
use serde::{Deserialize, Serialize};
use toml::Spanned;

/// Bin widths of the default bin-size sweep, massive particles.
pub const DEFAULT_SWEEP_WIDTHS: [f64; 5] = [0.001, 0.01, 0.1, 0.2, 0.4];
/// Pixel widths of the default bin-size sweep, photons.
pub const DEFAULT_PHOTON_SWEEP_WIDTHS: [f64; 5] = [0.5e-6, 1e-6, 2e-6, 5e-6, 10e-6];
pub const DEFAULT_SWEEP_TIME: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{}", self.render())]
pub struct ConfigError {
    pub line: Option<usize>,
    pub key: Option<String>,
    pub message: String,
}

impl ConfigError {
    fn render(&self) -> String {
        let mut out = String::new();
        if let Some(line) = self.line {
            out.push_str(&format!("line {line}: "));
        }
        if let Some(key) = &self.key {
            out.push_str(&format!("`{key}`: "));
        }
        out.push_str(&self.message);
        out
    }
}

/// Sweep settings carried alongside the scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSettings {
    /// Snapshot time of the bin-size sweep.
    pub time: f64,
    pub bin_widths: Vec<f64>,
    /// Buildup checkpoints; `None` uses powers of ten up to the budget.
    pub checkpoints: Option<Vec<u64>>,
}

impl SweepSettings {
    pub fn defaults(config: &ScenarioConfig) -> Self {
        match config.params {
            ScenarioParams::DoubleSlit(_) => Self {
                time: config.snapshots[0],
                bin_widths: DEFAULT_PHOTON_SWEEP_WIDTHS.to_vec(),
                checkpoints: None,
            },
            _ => Self {
                time: DEFAULT_SWEEP_TIME,
                bin_widths: DEFAULT_SWEEP_WIDTHS.to_vec(),
                checkpoints: None,
            },
        }
    }

    /// Checkpoints actually used for a budget of `particles`.
    pub fn checkpoints_for(&self, particles: u64) -> Vec<u64> {
        if let Some(list) = &self.checkpoints {
            return list.clone();
        }
        let mut list: Vec<u64> = std::iter::successors(Some(100u64), |m| m.checked_mul(10))
            .take_while(|&m| m < particles)
            .collect();
        list.push(particles);
        list
    }
}

/// A parsed run file.
#[derive(Clone, Debug, PartialEq)]
pub struct RunFile {
    pub scenario: ScenarioConfig,
    pub sweep: SweepSettings,
}

impl RunFile {
    pub fn defaults(kind: ScenarioKind) -> Self {
        let scenario = ScenarioConfig::defaults(kind);
        let sweep = SweepSettings::defaults(&scenario);
        Self { scenario, sweep }
    }

    /// Checks the sweep settings against the scenario.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.scenario
            .validate()
            .map_err(|e| from_scenario(e, &HashMap::new(), ""))?;
        validate_sweep(&self.sweep, self.scenario.particles, &HashMap::new(), "")
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    kind: Option<Spanned<String>>,
    particles: Option<Spanned<u64>>,
    seed: Option<Spanned<u64>>,
    snapshots: Option<Spanned<Vec<f64>>>,
    phi0: Option<Spanned<f64>>,
    detector: Option<RawDetector>,
    single_packet: Option<Spanned<RawSingle>>,
    two_packets: Option<Spanned<RawTwo>>,
    wall: Option<Spanned<RawWall>>,
    double_slit: Option<Spanned<RawSlits>>,
    sweep: Option<RawSweep>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDetector {
    x_min: Option<Spanned<f64>>,
    x_max: Option<Spanned<f64>>,
    dx: Option<Spanned<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSingle {
    x0: Option<Spanned<f64>>,
    v0: Option<Spanned<f64>>,
    sigma_v: Option<Spanned<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTwo {
    x1: Option<Spanned<f64>>,
    x2: Option<Spanned<f64>>,
    v0: Option<Spanned<f64>>,
    sigma_v: Option<Spanned<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWall {
    x0: Option<Spanned<f64>>,
    v0: Option<Spanned<f64>>,
    sigma_v: Option<Spanned<f64>>,
    wall_x: Option<Spanned<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSlits {
    wavelength: Option<Spanned<f64>>,
    slit_separation: Option<Spanned<f64>>,
    screen_distance: Option<Spanned<f64>>,
    segment_width: Option<Spanned<f64>>,
    segments: Option<Spanned<usize>>,
    half_angle: Option<Spanned<f64>>,
    far_field_ratio: Option<Spanned<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    time: Option<Spanned<f64>>,
    bin_widths: Option<Spanned<Vec<f64>>>,
    checkpoints: Option<Spanned<Vec<u64>>>,
}

type Spans = HashMap<String, Range<usize>>;

/// Copies a present value into `target` and remembers where it came from.
fn apply<T>(spans: &mut Spans, key: &str, slot: Option<Spanned<T>>, target: &mut T) {
    if let Some(value) = slot {
        spans.insert(key.to_string(), value.span());
        *target = value.into_inner();
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn anchored(text: &str, spans: &Spans, key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError {
        line: spans.get(key).map(|s| line_of(text, s.start)),
        key: Some(key.to_string()),
        message: message.into(),
    }
}

fn from_scenario(err: ScenarioError, spans: &Spans, text: &str) -> ConfigError {
    match err {
        ScenarioError::Invalid { key, message } => anchored(text, spans, key, message),
        other => ConfigError {
            line: None,
            key: None,
            message: other.to_string(),
        },
    }
}

fn validate_sweep(sweep: &SweepSettings, particles: u64, spans: &Spans, text: &str) -> Result<(), ConfigError> {
    if !(sweep.time > 0.0 && sweep.time.is_finite()) {
        return Err(anchored(
            text,
            spans,
            "sweep.time",
            format!("must be positive, got {}", sweep.time),
        ));
    }
    if sweep.bin_widths.is_empty() {
        return Err(anchored(
            text,
            spans,
            "sweep.bin_widths",
            "at least one width is required",
        ));
    }
    if let Some(w) = sweep.bin_widths.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
        return Err(anchored(
            text,
            spans,
            "sweep.bin_widths",
            format!("widths must be positive, got {w}"),
        ));
    }
    if let Some(list) = &sweep.checkpoints {
        if list.is_empty() || list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(anchored(
                text,
                spans,
                "sweep.checkpoints",
                "must be a non-empty strictly ascending list",
            ));
        }
        if list[list.len() - 1] > particles {
            return Err(anchored(
                text,
                spans,
                "sweep.checkpoints",
                format!("{} exceeds the particle budget {particles}", list[list.len() - 1]),
            ));
        }
    }
    Ok(())
}

/// Parses and validates a run file.
pub fn parse_config(text: &str) -> Result<RunFile, ConfigError> {
    let raw: RawFile = toml::from_str(text).map_err(|e| ConfigError {
        line: e.span().map(|s| line_of(text, s.start)),
        key: None,
        message: e.message().trim().to_string(),
    })?;
    let mut spans = Spans::new();

    let Some(kind) = raw.kind else {
        let names: Vec<&str> = ScenarioKind::ALL.iter().map(|k| k.name()).collect();
        return Err(ConfigError {
            line: None,
            key: Some("kind".into()),
            message: format!("missing; expected one of {}", names.join(", ")),
        });
    };
    spans.insert("kind".into(), kind.span());
    let kind: ScenarioKind = kind
        .get_ref()
        .parse()
        .map_err(|e: ScenarioError| anchored(text, &spans, "kind", e.to_string()))?;

    let sections = [
        (ScenarioKind::SinglePacket, raw.single_packet.as_ref().map(|s| s.span())),
        (ScenarioKind::TwoPackets, raw.two_packets.as_ref().map(|s| s.span())),
        (ScenarioKind::Wall, raw.wall.as_ref().map(|s| s.span())),
        (ScenarioKind::DoubleSlit, raw.double_slit.as_ref().map(|s| s.span())),
    ];
    for (section, span) in sections {
        if let (true, Some(span)) = (section != kind, span) {
            return Err(ConfigError {
                line: Some(line_of(text, span.start)),
                key: Some(section.name().into()),
                message: format!("section does not apply to kind `{kind}`"),
            });
        }
    }

    let mut cfg = ScenarioConfig::defaults(kind);
    apply(&mut spans, "particles", raw.particles, &mut cfg.particles);
    apply(&mut spans, "seed", raw.seed, &mut cfg.seed);
    apply(&mut spans, "snapshots", raw.snapshots, &mut cfg.snapshots);
    apply(&mut spans, "phi0", raw.phi0, &mut cfg.phi0);
    if let Some(d) = raw.detector {
        apply(&mut spans, "detector.x_min", d.x_min, &mut cfg.detector.x_min);
        apply(&mut spans, "detector.x_max", d.x_max, &mut cfg.detector.x_max);
        apply(&mut spans, "detector.dx", d.dx, &mut cfg.detector.delta_x);
    }
    match &mut cfg.params {
        ScenarioParams::SinglePacket(p) => {
            if let Some(s) = raw.single_packet.map(Spanned::into_inner) {
                apply(&mut spans, "single_packet.x0", s.x0, &mut p.x0);
                apply(&mut spans, "single_packet.v0", s.v0, &mut p.v0);
                apply(&mut spans, "single_packet.sigma_v", s.sigma_v, &mut p.sigma_v);
            }
        }
        ScenarioParams::TwoPackets(p) => {
            if let Some(s) = raw.two_packets.map(Spanned::into_inner) {
                apply(&mut spans, "two_packets.x1", s.x1, &mut p.x1);
                apply(&mut spans, "two_packets.x2", s.x2, &mut p.x2);
                apply(&mut spans, "two_packets.v0", s.v0, &mut p.v0);
                apply(&mut spans, "two_packets.sigma_v", s.sigma_v, &mut p.sigma_v);
            }
        }
        ScenarioParams::Wall(p) => {
            if let Some(s) = raw.wall.map(Spanned::into_inner) {
                apply(&mut spans, "wall.x0", s.x0, &mut p.x0);
                apply(&mut spans, "wall.v0", s.v0, &mut p.v0);
                apply(&mut spans, "wall.sigma_v", s.sigma_v, &mut p.sigma_v);
                apply(&mut spans, "wall.wall_x", s.wall_x, &mut p.wall_x);
            }
        }
        ScenarioParams::DoubleSlit(p) => {
            if let Some(s) = raw.double_slit.map(Spanned::into_inner) {
                apply(&mut spans, "double_slit.wavelength", s.wavelength, &mut p.wavelength);
                apply(
                    &mut spans,
                    "double_slit.slit_separation",
                    s.slit_separation,
                    &mut p.slit_separation,
                );
                apply(
                    &mut spans,
                    "double_slit.screen_distance",
                    s.screen_distance,
                    &mut p.screen_distance,
                );
                apply(
                    &mut spans,
                    "double_slit.segment_width",
                    s.segment_width,
                    &mut p.segment_width,
                );
                apply(&mut spans, "double_slit.segments", s.segments, &mut p.segments);
                apply(
                    &mut spans,
                    "double_slit.far_field_ratio",
                    s.far_field_ratio,
                    &mut p.far_field_ratio,
                );
                if let Some(a) = s.half_angle {
                    spans.insert("double_slit.half_angle".into(), a.span());
                    p.half_angle = Some(a.into_inner());
                }
            }
        }
    }
    cfg.validate().map_err(|e| from_scenario(e, &spans, text))?;

    let mut sweep = SweepSettings::defaults(&cfg);
    if let Some(s) = raw.sweep {
        apply(&mut spans, "sweep.time", s.time, &mut sweep.time);
        apply(&mut spans, "sweep.bin_widths", s.bin_widths, &mut sweep.bin_widths);
        if let Some(c) = s.checkpoints {
            spans.insert("sweep.checkpoints".into(), c.span());
            sweep.checkpoints = Some(c.into_inner());
        }
    }
    validate_sweep(&sweep, cfg.particles, &spans, text)?;

    Ok(RunFile { scenario: cfg, sweep })
}

#[derive(Serialize)]
struct OutFile<'a> {
    kind: &'static str,
    particles: u64,
    seed: u64,
    snapshots: &'a [f64],
    phi0: f64,
    detector: OutDetector,
    #[serde(skip_serializing_if = "Option::is_none")]
    single_packet: Option<&'a phasecount::scenario::SinglePacketParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    two_packets: Option<&'a phasecount::scenario::TwoPacketParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall: Option<&'a phasecount::scenario::WallParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    double_slit: Option<&'a phasecount::scenario::DoubleSlitParams>,
    sweep: &'a SweepSettings,
}

#[derive(Serialize)]
struct OutDetector {
    x_min: f64,
    x_max: f64,
    dx: f64,
}

/// Writes `file` back out as TOML that [`parse_config`] reads to the same value.
pub fn emit_config(file: &RunFile) -> String {
    let cfg = &file.scenario;
    let params = &cfg.params;
    let out = OutFile {
        kind: cfg.kind().name(),
        particles: cfg.particles,
        seed: cfg.seed,
        snapshots: &cfg.snapshots,
        phi0: cfg.phi0,
        detector: OutDetector {
            x_min: cfg.detector.x_min,
            x_max: cfg.detector.x_max,
            dx: cfg.detector.delta_x,
        },
        single_packet: match params {
            ScenarioParams::SinglePacket(p) => Some(p),
            _ => None,
        },
        two_packets: match params {
            ScenarioParams::TwoPackets(p) => Some(p),
            _ => None,
        },
        wall: match params {
            ScenarioParams::Wall(p) => Some(p),
            _ => None,
        },
        double_slit: match params {
            ScenarioParams::DoubleSlit(p) => Some(p),
            _ => None,
        },
        sweep: &file.sweep,
    };
    toml::to_string(&out).expect("run file serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use phasecount::scenario::DEFAULT_SNAPSHOTS;

    #[test]
    fn minimal_file_gets_defaults() {
        let file = parse_config("kind = \"single_packet\"\n").unwrap();
        let cfg = &file.scenario;
        assert_eq!(cfg.snapshots, DEFAULT_SNAPSHOTS.to_vec());
        assert_eq!(cfg.detector.delta_x, 0.01);
        assert_eq!(cfg.phi0, -std::f64::consts::FRAC_PI_4);
        let ScenarioParams::SinglePacket(p) = cfg.params else {
            panic!()
        };
        assert_eq!((p.v0, p.sigma_v), (5.0, 1.0));
        assert_eq!(file.sweep.bin_widths, DEFAULT_SWEEP_WIDTHS.to_vec());
    }

    #[test]
    fn two_packets_default_sources() {
        let file = parse_config("kind = \"two_packets\"\n[two_packets]\nv0 = 4\n").unwrap();
        let ScenarioParams::TwoPackets(p) = file.scenario.params else {
            panic!()
        };
        assert_eq!((p.x1, p.x2, p.v0), (-20.0, 20.0, 4.0));
    }

    #[test]
    fn negative_bin_width_names_key_and_line() {
        let err = parse_config("kind = \"single_packet\"\n\n[detector]\ndx = -1\n").unwrap_err();
        assert_eq!(err.key.as_deref(), Some("detector.dx"));
        assert_eq!(err.line, Some(4));
        assert!(err.to_string().starts_with("line 4: `detector.dx`"), "{err}");
    }

    #[test]
    fn zero_budget_is_rejected() {
        let err = parse_config("kind = \"wall\"\nparticles = 0\n").unwrap_err();
        assert_eq!((err.key.as_deref(), err.line), (Some("particles"), Some(2)));
    }

    #[test]
    fn missing_kind() {
        let err = parse_config("particles = 10\n").unwrap_err();
        assert_eq!(err.key.as_deref(), Some("kind"));
        assert!(err.message.contains("double_slit"));
    }

    #[test]
    fn unknown_kind_and_keys() {
        let err = parse_config("\nkind = \"triple_slit\"\n").unwrap_err();
        assert_eq!(err.line, Some(2));
        let err = parse_config("kind = \"wall\"\n[detector]\nwidth = 3\n").unwrap_err();
        assert_eq!(err.line, Some(3));
        assert!(err.message.contains("width"), "{err}");
        let err = parse_config("kind = \"wall\"\nspeed = 3\n").unwrap_err();
        assert_eq!(err.line, Some(2));
    }

    #[test]
    fn malformed_numbers() {
        let err = parse_config("kind = \"wall\"\nparticles = \"many\"\n").unwrap_err();
        assert_eq!(err.line, Some(2));
        let err = parse_config("kind = \"wall\"\nparticles = -3\n").unwrap_err();
        assert_eq!(err.line, Some(2));
        let err = parse_config("kind = \"wall\"\nphi0 = 1.2.3\n").unwrap_err();
        assert_eq!(err.line, Some(2));
    }

    #[test]
    fn foreign_section_is_rejected() {
        let err = parse_config("kind = \"wall\"\n\n[two_packets]\nx1 = 3\n").unwrap_err();
        assert_eq!(err.key.as_deref(), Some("two_packets"));
        assert_eq!(err.line, Some(3));
    }

    #[test]
    fn cross_field_errors_point_at_the_key() {
        let err = parse_config("kind = \"two_packets\"\n[two_packets]\nx1 = 30\n").unwrap_err();
        // the rule is reported on x2, which kept its default
        assert_eq!((err.key.as_deref(), err.line), (Some("two_packets.x2"), None));
        let err = parse_config("kind = \"wall\"\nparticles = 10\n[sweep]\ncheckpoints = [5, 20]\n").unwrap_err();
        assert_eq!((err.key.as_deref(), err.line), (Some("sweep.checkpoints"), Some(4)));
    }

    #[test]
    fn emit_round_trips() {
        for kind in ScenarioKind::ALL {
            let mut file = RunFile::defaults(kind);
            file.scenario.seed = 99;
            file.sweep.checkpoints = Some(vec![10, 100]);
            let text = emit_config(&file);
            assert_eq!(parse_config(&text).unwrap(), file, "{text}");
        }
    }

    #[test]
    fn default_checkpoints() {
        let sweep = SweepSettings::defaults(&ScenarioConfig::defaults(ScenarioKind::DoubleSlit));
        assert_eq!(sweep.checkpoints_for(100_000), vec![100, 1000, 10_000, 100_000]);
        assert_eq!(sweep.checkpoints_for(50), vec![50]);
    }
}
