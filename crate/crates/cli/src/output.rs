//! Files written by the commands: profile CSVs, the JSON report and the
//! run manifest.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use phasecount::reference::ComparisonReport;
use phasecount::{DensityProfile, ScenarioKind};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const PROFILE_COLUMNS: [&str; 7] = [
    "bin_center",
    "raw_count",
    "raw_density",
    "recorded_count",
    "recorded_density",
    "reference_exact",
    "reference_approx",
];

/// Metadata printed as `#` lines above a profile table.
pub struct ProfileHeader<'a> {
    pub kind: ScenarioKind,
    pub seed: u64,
    pub snapshot_time: f64,
    pub overflow: u64,
    pub rejected: u64,
    /// Extra `name: value` lines, e.g. the checkpoint of a buildup profile.
    pub extra: Vec<(&'static str, String)>,
    /// The run file, echoed verbatim.
    pub config: &'a str,
}

fn units(kind: ScenarioKind) -> (&'static str, &'static str) {
    match kind {
        ScenarioKind::DoubleSlit => (
            "SI; lengths in m, times in s, densities per m per photon",
            "m, photons, 1/m, photons, 1/m, 1/m, 1/m",
        ),
        _ => (
            "hbar/m = 1, sigma_v = 1; lengths in hbar/(m sigma_v), times in hbar/(m sigma_v^2), densities per unit length per particle",
            "length, particles, 1/length, particles, 1/length, 1/length, 1/length",
        ),
    }
}

fn number(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{v:e}")
    }
}

/// Plain decimal for ordinary times, scientific for photon flight times.
pub fn format_time(t: f64) -> String {
    if t != 0.0 && t.abs() < 1e-3 {
        format!("{t:e}")
    } else {
        format!("{t}")
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes one profile with its header block.
///
/// `exact` and `approx` are reference densities on the same bins; a missing
/// reference is written as `nan`.
pub fn write_profile(
    path: &Path,
    header: &ProfileHeader<'_>,
    profile: &DensityProfile,
    exact: Option<&[f64]>,
    approx: Option<&[f64]>,
) -> Result<(), CliError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    let (unit_line, column_units) = units(header.kind);
    let mut lines = vec![
        format!("phasecount {VERSION}"),
        format!("scenario: {}", header.kind),
        format!("seed: {}", header.seed),
        format!("snapshot_time: {}", format_time(header.snapshot_time)),
        format!("particles: {}", profile.total_particles),
        format!("delta_x: {}", profile.delta_x),
        format!("overflow: {}", header.overflow),
        format!("rejected: {}", header.rejected),
    ];
    lines.extend(header.extra.iter().map(|(k, v)| format!("{k}: {v}")));
    lines.push(format!("units: {unit_line}"));
    lines.push(format!("column units: {column_units}"));
    lines.push("config:".into());
    lines.extend(header.config.lines().map(|l| format!("  {l}")));
    for line in lines {
        writeln!(out, "{}", format!("# {line}").trim_end()).map_err(io_err(path))?;
    }

    let mut csv = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| CliError::Io {
        path: path.to_path_buf(),
        source: e.into(),
    };
    csv.write_record(PROFILE_COLUMNS).map_err(csv_err)?;
    for (i, row) in profile.rows.iter().enumerate() {
        let exact = exact.map_or(f64::NAN, |e| e[i]);
        let approx = approx.map_or(f64::NAN, |a| a[i]);
        csv.write_record([
            format!("{}", row.center),
            row.raw_count.to_string(),
            number(row.raw_density),
            format!("{}", row.recorded_count),
            number(row.recorded_density),
            number(exact),
            number(approx),
        ])
        .map_err(csv_err)?;
    }
    csv.flush().map_err(io_err(path))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    std::fs::write(path, text).map_err(io_err(path))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(io_err(path))
}

pub fn create_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path).map_err(io_err(path))
}

/// Headline numbers of one comparison, without the per-bin vectors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonSummary {
    pub reference: String,
    pub observable: String,
    pub core_bins: usize,
    pub linf: f64,
    pub relative_l2: f64,
    pub chi2_per_bin: f64,
    pub max_abs_z: f64,
    pub z_exceed_fraction: f64,
    pub visibility_window: Option<(f64, f64)>,
    pub visibility_simulated: Option<f64>,
    pub visibility_reference: Option<f64>,
}

impl ComparisonSummary {
    pub fn new(report: &ComparisonReport, window: Option<(f64, f64)>) -> Self {
        Self {
            reference: report.reference.name().into(),
            observable: match report.observable {
                phasecount::reference::Observable::Recorded => "recorded".into(),
                phasecount::reference::Observable::Raw => "raw".into(),
            },
            core_bins: report.core_bins,
            linf: report.linf,
            relative_l2: report.relative_l2,
            chi2_per_bin: report.chi2_per_bin(),
            max_abs_z: report.max_abs_z,
            z_exceed_fraction: report.z_exceed_fraction,
            visibility_window: window,
            visibility_simulated: report.visibility_simulated,
            visibility_reference: report.visibility_reference,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotReport {
    pub time: f64,
    pub total_raw: u64,
    pub total_recorded: f64,
    pub comparisons: Vec<ComparisonSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlitSummary {
    /// `λ l / D`.
    pub expected_spacing: f64,
    pub measured_spacing: Option<f64>,
    pub spacing_error: Option<f64>,
    pub segment_visibility: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// `report.json` of the `run` command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario: String,
    pub seed: u64,
    pub particles: u64,
    pub snapshots: Vec<SnapshotReport>,
    pub double_slit: Option<SlitSummary>,
    pub checks: Vec<CheckResult>,
}

/// One row of a sweep summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub file: String,
    pub delta_x: f64,
    pub particles: u64,
    pub total_raw: u64,
    pub total_recorded: f64,
    /// `Σ N̄ / Σ N`.
    pub recorded_fraction: f64,
    pub visibility: Option<f64>,
    pub segment_visibility: Option<f64>,
}

/// `report.json` of the sweep commands.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub scenario: String,
    pub sweep: String,
    pub seed: u64,
    pub snapshot_time: f64,
    pub visibility_window: Option<(f64, f64)>,
    pub entries: Vec<SweepEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    /// Relative to the output directory.
    pub path: String,
    pub role: String,
    pub snapshot_time: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tally {
    pub snapshot_time: f64,
    pub binned: u64,
    pub overflow: u64,
    pub rejected: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub simulate_s: f64,
    pub analyze_s: f64,
    pub write_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub command: String,
    pub scenario: String,
    pub seed: u64,
    pub particles: u64,
    pub threads: Option<usize>,
    /// The run file that reproduces this output.
    pub config: String,
    pub files: Vec<FileEntry>,
    pub tallies: Vec<Tally>,
    pub timings: Timings,
    pub warnings: Vec<String>,
}

impl RunManifest {
    pub fn paths(&self, root: &Path) -> Vec<PathBuf> {
        self.files.iter().map(|f| root.join(&f.path)).collect()
    }
}
