//! The `run`, `sweep-bin-size` and `sweep-buildup` commands.

use std::path::{Path, PathBuf};
use std::time::Instant;

use phasecount::reference::{
    compare, dominant_period, fringe_visibility, CompareOptions, Observable, ReferenceProfile,
};
use phasecount::scenario::{self, ReferenceSet, RunOptions, Scenario, ScenarioParams};
use phasecount::{DensityProfile, DetectorArray, ScenarioConfig, ScenarioKind};

use crate::config::{emit_config, RunFile};
use crate::output::{
    create_dir, format_time, write_json, write_profile, write_text, CheckResult, ComparisonSummary, FileEntry,
    ProfileHeader, RunManifest, RunReport, SlitSummary, SnapshotReport, SweepEntry, SweepReport, Tally, Timings,
    VERSION,
};
use crate::CliError;

/// Overflow above this fraction of the budget triggers a warning.
pub const OVERFLOW_WARNING: f64 = 0.1;
/// Checks in `--check` mode apply to snapshots at or after this time.
pub const CHECK_FROM_TIME: f64 = 2.0;
pub const CHECK_Z_FRACTION: f64 = 0.01;
pub const CHECK_RELATIVE_L2: f64 = 0.05;
pub const CHECK_WALL_FRACTION: f64 = 0.02;
pub const CHECK_SPACING: f64 = 0.02;

/// A validated run file plus where and how to execute it.
#[derive(Clone, Debug)]
pub struct Request {
    pub file: RunFile,
    pub out: PathBuf,
    pub threads: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub manifest: RunManifest,
    pub report: RunReport,
}

/// Window used for the fringe visibility of `cfg`'s profiles, if any.
pub fn visibility_window(cfg: &ScenarioConfig) -> Option<(f64, f64)> {
    match cfg.params {
        ScenarioParams::SinglePacket(_) => None,
        ScenarioParams::TwoPackets(p) => {
            let mid = 0.5 * (p.x1 + p.x2);
            Some((mid - 5.0, mid + 5.0))
        }
        ScenarioParams::Wall(p) => Some((p.wall_x - 5.0, p.wall_x)),
        ScenarioParams::DoubleSlit(p) => {
            let s = p.geometry().ok()?.fringe_spacing();
            Some((-2.0 * s, 2.0 * s))
        }
    }
}

struct Files {
    root: PathBuf,
    entries: Vec<FileEntry>,
}

impl Files {
    fn new(root: &Path) -> Result<Self, CliError> {
        create_dir(root)?;
        Ok(Self {
            root: root.to_path_buf(),
            entries: Vec::new(),
        })
    }

    fn add(&mut self, name: String, role: &str, snapshot_time: Option<f64>) -> PathBuf {
        self.entries.push(FileEntry {
            path: name.clone(),
            role: role.into(),
            snapshot_time,
        });
        self.root.join(name)
    }
}

struct Evaluated {
    exact: Option<ReferenceProfile>,
    approx: Option<ReferenceProfile>,
}

impl Evaluated {
    fn new(refs: &ReferenceSet, centers: &[f64], t: f64) -> Self {
        Self {
            exact: refs.exact.as_ref().map(|m| m.profile(centers, t)),
            approx: refs.approx.as_ref().map(|m| m.profile(centers, t)),
        }
    }

    fn densities(&self) -> (Option<Vec<f64>>, Option<Vec<f64>>) {
        (
            self.exact.as_ref().map(ReferenceProfile::density),
            self.approx.as_ref().map(ReferenceProfile::density),
        )
    }

    /// The most accurate reference available.
    fn best(&self) -> Option<&ReferenceProfile> {
        self.exact.as_ref().or(self.approx.as_ref())
    }
}

fn mean_groups(values: &[f64], group: usize) -> Vec<f64> {
    values
        .chunks(group)
        .map(|c| c.iter().sum::<f64>() / c.len() as f64)
        .collect()
}

fn pixels_per_segment(cfg: &ScenarioConfig, delta_x: f64) -> Option<usize> {
    let ScenarioParams::DoubleSlit(p) = cfg.params else {
        return None;
    };
    let ratio = p.segment_width / delta_x;
    (ratio >= 1.0 && (ratio - ratio.round()).abs() < 1e-6).then(|| ratio.round() as usize)
}

fn segment_visibility(segments: &DensityProfile) -> Option<f64> {
    let centers = segments.centers();
    let (lo, hi) = (centers[0], centers[centers.len() - 1]);
    fringe_visibility(&centers, &segments.recorded_density(), (lo, hi))
}

/// Writes `profile` and, for the double slit, its segment aggregation.
#[allow(clippy::too_many_arguments)]
fn emit_profile(
    files: &mut Files,
    cfg: &ScenarioConfig,
    config_text: &str,
    name: &str,
    det: &DetectorArray,
    profile: &DensityProfile,
    refs: &Evaluated,
    extra: Vec<(&'static str, String)>,
) -> Result<Option<DensityProfile>, CliError> {
    let t = det.snapshot_time();
    let header = ProfileHeader {
        kind: cfg.kind(),
        seed: cfg.seed,
        snapshot_time: t,
        overflow: det.overflow(),
        rejected: det.rejected(),
        extra,
        config: config_text,
    };
    let (exact, approx) = refs.densities();
    let path = files.add(format!("{name}.csv"), "profile", Some(t));
    write_profile(&path, &header, profile, exact.as_deref(), approx.as_deref())?;

    let Some(group) = pixels_per_segment(cfg, profile.delta_x) else {
        return Ok(None);
    };
    let segments = profile.aggregate(group);
    let exact = exact.map(|e| mean_groups(&e, group));
    let approx = approx.map(|a| mean_groups(&a, group));
    let path = files.add(format!("{name}_segments.csv"), "segments", Some(t));
    write_profile(&path, &header, &segments, exact.as_deref(), approx.as_deref())?;
    Ok(Some(segments))
}

fn tally(det: &DetectorArray) -> Tally {
    Tally {
        snapshot_time: det.snapshot_time(),
        binned: det.binned(),
        overflow: det.overflow(),
        rejected: det.rejected(),
    }
}

fn overflow_warnings(tallies: &[Tally]) -> Vec<String> {
    tallies
        .iter()
        .filter_map(|t| {
            let offered = t.binned + t.overflow + t.rejected;
            (t.overflow as f64 > OVERFLOW_WARNING * offered as f64).then(|| {
                format!(
                    "t = {}: {} of {} particles fell outside the detector",
                    format_time(t.snapshot_time),
                    t.overflow,
                    offered
                )
            })
        })
        .collect()
}

fn options(threads: Option<usize>) -> RunOptions {
    RunOptions {
        threads,
        checkpoints: Vec::new(),
    }
}

fn secs(since: Instant) -> f64 {
    since.elapsed().as_secs_f64()
}

fn build(cfg: &ScenarioConfig) -> Result<Box<dyn Scenario>, CliError> {
    Ok(scenario::build(cfg)?)
}

/// Executes the configured scenario and writes profiles, report and manifest.
pub fn run(req: &Request) -> Result<RunOutcome, CliError> {
    let cfg = &req.file.scenario;
    let config_text = emit_config(&req.file);
    let mut files = Files::new(&req.out)?;

    let start = Instant::now();
    let sc = build(cfg)?;
    let output = scenario::run(sc.as_ref(), &options(req.threads))?;
    let simulate_s = secs(start);

    let refs = sc.references();
    let window = visibility_window(cfg);
    let mut snapshots = Vec::new();
    let mut tallies = Vec::new();
    let mut slit = None;
    let mut analyze_s = 0.0;
    let start = Instant::now();
    write_text(&files.add("config.toml".into(), "config", None), &config_text)?;
    for (i, det) in output.detectors.iter().enumerate() {
        let t = det.snapshot_time();
        let profile = det.density_profile(cfg.particles);
        let clock = Instant::now();
        let evaluated = Evaluated::new(&refs, &profile.centers(), t);
        let mut comparisons = Vec::new();
        let recorded = CompareOptions {
            visibility_window: window,
            ..CompareOptions::default()
        };
        for reference in [&evaluated.exact, &evaluated.approx].into_iter().flatten() {
            comparisons.push(ComparisonSummary::new(&compare(&profile, reference, &recorded), window));
        }
        if let Some(reference) = evaluated.best() {
            let raw = CompareOptions {
                observable: Observable::Raw,
                ..recorded
            };
            comparisons.push(ComparisonSummary::new(&compare(&profile, reference, &raw), window));
        }
        analyze_s += secs(clock);

        let segments = emit_profile(
            &mut files,
            cfg,
            &config_text,
            &format!("profile_{i}"),
            det,
            &profile,
            &evaluated,
            Vec::new(),
        )?;
        if let (ScenarioParams::DoubleSlit(p), Some(segments)) = (cfg.params, segments) {
            let expected = p.geometry()?.fringe_spacing();
            let measured = dominant_period(
                &profile.centers(),
                &profile.recorded_density(),
                0.5 * expected,
                2.0 * expected,
            );
            slit = Some(SlitSummary {
                expected_spacing: expected,
                measured_spacing: measured,
                spacing_error: measured.map(|m| (m - expected).abs() / expected),
                segment_visibility: segment_visibility(&segments),
            });
        }
        snapshots.push(SnapshotReport {
            time: t,
            total_raw: profile.total_raw(),
            total_recorded: profile.total_recorded(),
            comparisons,
        });
        tallies.push(tally(det));
    }

    let mut report = RunReport {
        scenario: cfg.kind().name().into(),
        seed: cfg.seed,
        particles: cfg.particles,
        snapshots,
        double_slit: slit,
        checks: Vec::new(),
    };
    report.checks = checks(cfg, &output.detectors, &report);
    write_json(&files.add("report.json".into(), "report", None), &report)?;
    let write_s = secs(start) - analyze_s;

    let manifest = RunManifest {
        version: VERSION.into(),
        command: "run".into(),
        scenario: cfg.kind().name().into(),
        seed: cfg.seed,
        particles: cfg.particles,
        threads: req.threads,
        config: config_text,
        warnings: overflow_warnings(&tallies),
        files: files.entries,
        tallies,
        timings: Timings {
            simulate_s,
            analyze_s,
            write_s,
        },
    };
    write_json(&req.out.join("manifest.json"), &manifest)?;
    Ok(RunOutcome { manifest, report })
}

fn check(name: String, passed: bool, detail: String) -> CheckResult {
    CheckResult { name, passed, detail }
}

/// Pass/fail checks evaluated from a finished run.
fn checks(cfg: &ScenarioConfig, detectors: &[DetectorArray], report: &RunReport) -> Vec<CheckResult> {
    let mut out = Vec::new();
    if let Some(slit) = &report.double_slit {
        let passed = slit.spacing_error.is_some_and(|e| e <= CHECK_SPACING);
        out.push(check(
            "fringe spacing".into(),
            passed,
            format!(
                "measured {:?} vs expected {:e}, limit {CHECK_SPACING}",
                slit.measured_spacing, slit.expected_spacing
            ),
        ));
        return out;
    }
    for snap in report.snapshots.iter().filter(|s| s.time >= CHECK_FROM_TIME) {
        let Some(c) = snap.comparisons.first() else { continue };
        out.push(check(
            format!("t = {} z-score", format_time(snap.time)),
            c.z_exceed_fraction <= CHECK_Z_FRACTION,
            format!(
                "{:.4} of {} core bins with |z| > 3 vs {}, limit {CHECK_Z_FRACTION}",
                c.z_exceed_fraction, c.core_bins, c.reference
            ),
        ));
        out.push(check(
            format!("t = {} relative L2", format_time(snap.time)),
            c.relative_l2 <= CHECK_RELATIVE_L2,
            format!("{:.4} vs {}, limit {CHECK_RELATIVE_L2}", c.relative_l2, c.reference),
        ));
    }
    if let ScenarioParams::Wall(_) = cfg.params {
        for det in detectors {
            let fraction = near_wall_fraction(&det.density_profile(cfg.particles));
            out.push(check(
                format!("t = {} near-wall density", format_time(det.snapshot_time())),
                fraction < CHECK_WALL_FRACTION,
                format!("two bins nearest the wall at {fraction:.4} of peak, limit {CHECK_WALL_FRACTION}"),
            ));
        }
    }
    out
}

/// Largest recorded density of the two bins nearest the wall, relative to
/// the profile peak. The wall sits at the right edge of the detector.
pub fn near_wall_fraction(profile: &DensityProfile) -> f64 {
    let density = profile.recorded_density();
    let peak = density.iter().copied().fold(0.0, f64::max);
    if peak == 0.0 {
        return 0.0;
    }
    density.iter().rev().take(2).copied().fold(0.0, f64::max) / peak
}

/// Replays one particle stream through every configured bin width.
pub fn sweep_bin_size(req: &Request) -> Result<(RunManifest, SweepReport), CliError> {
    let cfg = &req.file.scenario;
    let sweep = &req.file.sweep;
    let config_text = emit_config(&req.file);
    let mut files = Files::new(&req.out)?;

    let start = Instant::now();
    let sc = build(cfg)?;
    let arrays = scenario::sweep_bin_size(sc.as_ref(), sweep.time, &sweep.bin_widths, &options(req.threads))?;
    let simulate_s = secs(start);

    let start = Instant::now();
    write_text(&files.add("config.toml".into(), "config", None), &config_text)?;
    let refs = sc.references();
    let window = visibility_window(cfg);
    let mut entries = Vec::new();
    let mut tallies = Vec::new();
    for (i, det) in arrays.iter().enumerate() {
        let profile = det.density_profile(cfg.particles);
        let evaluated = Evaluated::new(&refs, &profile.centers(), sweep.time);
        let name = format!("binsize_{i}");
        let segments = emit_profile(
            &mut files,
            cfg,
            &config_text,
            &name,
            det,
            &profile,
            &evaluated,
            vec![("sweep", "bin_size".into())],
        )?;
        entries.push(sweep_entry(&name, &profile, window, segments.as_ref()));
        tallies.push(tally(det));
    }
    let report = SweepReport {
        scenario: cfg.kind().name().into(),
        sweep: "bin_size".into(),
        seed: cfg.seed,
        snapshot_time: sweep.time,
        visibility_window: window,
        entries,
    };
    write_json(&files.add("report.json".into(), "report", None), &report)?;
    let manifest = sweep_manifest(
        req,
        "sweep-bin-size",
        config_text,
        files,
        tallies,
        simulate_s,
        secs(start),
    );
    write_json(&req.out.join("manifest.json"), &manifest)?;
    Ok((manifest, report))
}

/// Profiles after each buildup checkpoint of a single pass.
///
/// Massive-particle scenarios are observed at the sweep time only; the
/// double slit keeps its single flight-time snapshot.
pub fn sweep_buildup(req: &Request) -> Result<(RunManifest, SweepReport), CliError> {
    let mut cfg = req.file.scenario.clone();
    let sweep = &req.file.sweep;
    if cfg.kind() != ScenarioKind::DoubleSlit {
        cfg.snapshots = vec![sweep.time];
    }
    let config_text = emit_config(&req.file);
    let checkpoints = sweep.checkpoints_for(cfg.particles);
    let mut files = Files::new(&req.out)?;

    let start = Instant::now();
    let sc = build(&cfg)?;
    let states = scenario::sweep_buildup(sc.as_ref(), &checkpoints, req.threads)?;
    let simulate_s = secs(start);

    let start = Instant::now();
    write_text(&files.add("config.toml".into(), "config", None), &config_text)?;
    let refs = sc.references();
    let window = visibility_window(&cfg);
    let time = cfg.snapshots[0];
    let mut entries = Vec::new();
    let mut tallies = Vec::new();
    for (i, state) in states.iter().enumerate() {
        let det = &state.detectors[0];
        let profile = det.density_profile(state.particles);
        let evaluated = Evaluated::new(&refs, &profile.centers(), time);
        let name = format!("buildup_{i}");
        let segments = emit_profile(
            &mut files,
            &cfg,
            &config_text,
            &name,
            det,
            &profile,
            &evaluated,
            vec![("sweep", "buildup".into()), ("checkpoint", state.particles.to_string())],
        )?;
        entries.push(sweep_entry(&name, &profile, window, segments.as_ref()));
        tallies.push(tally(det));
    }
    let report = SweepReport {
        scenario: cfg.kind().name().into(),
        sweep: "buildup".into(),
        seed: cfg.seed,
        snapshot_time: time,
        visibility_window: window,
        entries,
    };
    write_json(&files.add("report.json".into(), "report", None), &report)?;
    let manifest = sweep_manifest(
        req,
        "sweep-buildup",
        config_text,
        files,
        tallies,
        simulate_s,
        secs(start),
    );
    write_json(&req.out.join("manifest.json"), &manifest)?;
    Ok((manifest, report))
}

fn sweep_entry(
    name: &str,
    profile: &DensityProfile,
    window: Option<(f64, f64)>,
    segments: Option<&DensityProfile>,
) -> SweepEntry {
    let total_raw = profile.total_raw();
    let total_recorded = profile.total_recorded();
    SweepEntry {
        file: format!("{name}.csv"),
        delta_x: profile.delta_x,
        particles: profile.total_particles,
        total_raw,
        total_recorded,
        recorded_fraction: if total_raw == 0 {
            f64::NAN
        } else {
            total_recorded / total_raw as f64
        },
        visibility: window.and_then(|w| fringe_visibility(&profile.centers(), &profile.recorded_density(), w)),
        segment_visibility: segments.and_then(segment_visibility),
    }
}

fn sweep_manifest(
    req: &Request,
    command: &str,
    config: String,
    files: Files,
    tallies: Vec<Tally>,
    simulate_s: f64,
    write_s: f64,
) -> RunManifest {
    let cfg = &req.file.scenario;
    RunManifest {
        version: VERSION.into(),
        command: command.into(),
        scenario: cfg.kind().name().into(),
        seed: cfg.seed,
        particles: cfg.particles,
        threads: req.threads,
        config,
        warnings: overflow_warnings(&tallies),
        files: files.entries,
        tallies,
        timings: Timings {
            simulate_s,
            analyze_s: 0.0,
            write_s,
        },
    }
}
