//! Command-line front end for `phasecount`.
//!
//! Exit codes: 0 success, 1 invalid input, 2 runtime or I/O failure,
//! 3 a `run --check` criterion failed.

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use phasecount::scenario::{ScenarioError, REGISTRY};
use phasecount::ScenarioKind;

use crate::commands::Request;
use crate::config::{emit_config, parse_config, ConfigError, RunFile};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{}: {error}", path.display())]
    ConfigFile { path: PathBuf, error: ConfigError },
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Scenario(#[from] ScenarioError),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0} check(s) failed")]
    Check(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) | Self::ConfigFile { .. } | Self::Config(_) => 1,
            Self::Scenario(ScenarioError::ThreadPool(_)) => 2,
            Self::Scenario(_) => 1,
            Self::Io { .. } => 2,
            Self::Check(_) => 3,
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "phasecount",
    version,
    about = "Action-phase Monte Carlo with a phase-aggregating detector"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// List the registered scenarios.
    List,
    /// Print a complete run file with the defaults of a scenario.
    EmitConfig {
        #[arg(long, short)]
        scenario: String,
    },
    /// Run a scenario and write one profile per snapshot.
    Run {
        #[command(flatten)]
        common: Common,
        /// Evaluate the pass/fail checks and exit with 3 if any fails.
        #[arg(long)]
        check: bool,
    },
    /// Replay one particle stream through several bin widths.
    SweepBinSize {
        #[command(flatten)]
        common: Common,
        /// Snapshot time.
        #[arg(long)]
        time: Option<f64>,
        /// Comma-separated bin widths.
        #[arg(long, value_delimiter = ',')]
        widths: Option<Vec<f64>>,
    },
    /// Keep profiles at ascending particle counts of a single pass.
    SweepBuildup {
        #[command(flatten)]
        common: Common,
        /// Snapshot time (massive-particle scenarios).
        #[arg(long)]
        time: Option<f64>,
        /// Comma-separated ascending particle counts.
        #[arg(long, value_delimiter = ',')]
        checkpoints: Option<Vec<u64>>,
    },
}

#[derive(Args, Debug)]
pub struct Common {
    /// Scenario name; uses its defaults unless --config is given.
    #[arg(long, short)]
    pub scenario: Option<String>,
    /// TOML run file.
    #[arg(long, short)]
    pub config: Option<PathBuf>,
    /// Master seed; overrides the run file.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Particle budget.
    #[arg(long)]
    pub particles: Option<u64>,
    /// Output directory.
    #[arg(long, short, default_value = "output")]
    pub out: PathBuf,
    /// Worker threads.
    #[arg(long)]
    pub threads: Option<usize>,
}

fn parse_kind(name: &str) -> Result<ScenarioKind, CliError> {
    name.parse().map_err(CliError::Scenario)
}

/// Builds the validated run file selected by `common`.
pub fn load(common: &Common) -> Result<RunFile, CliError> {
    let mut file = match (&common.config, &common.scenario) {
        (Some(path), selector) => {
            let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            })?;
            let file = parse_config(&text).map_err(|error| CliError::ConfigFile {
                path: path.clone(),
                error,
            })?;
            if let Some(name) = selector {
                let kind = parse_kind(name)?;
                if kind != file.scenario.kind() {
                    return Err(CliError::Usage(format!(
                        "--scenario {kind} does not match kind `{}` in {}",
                        file.scenario.kind(),
                        path.display()
                    )));
                }
            }
            file
        }
        (None, Some(name)) => RunFile::defaults(parse_kind(name)?),
        (None, None) => return Err(CliError::Usage("one of --scenario or --config is required".into())),
    };
    if let Some(seed) = common.seed {
        file.scenario.seed = seed;
    }
    if let Some(particles) = common.particles {
        file.scenario.particles = particles;
    }
    Ok(file)
}

fn request(common: &Common, file: RunFile) -> Result<Request, CliError> {
    file.validate()?;
    if common.threads == Some(0) {
        return Err(CliError::Usage("--threads must be at least 1".into()));
    }
    Ok(Request {
        file,
        out: common.out.clone(),
        threads: common.threads,
    })
}

fn print_files(out: &mut dyn Write, req: &Request, manifest: &output::RunManifest) -> std::io::Result<()> {
    for f in &manifest.files {
        writeln!(out, "wrote {}", req.out.join(&f.path).display())?;
    }
    writeln!(out, "wrote {}", req.out.join("manifest.json").display())
}

fn execute(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let stdout = |e: std::io::Error| CliError::Io {
        path: "<stdout>".into(),
        source: e,
    };
    match cli.command {
        Command::List => {
            for r in REGISTRY {
                writeln!(out, "{:<14} {}", r.kind.name(), r.summary).map_err(stdout)?;
            }
        }
        Command::EmitConfig { scenario } => {
            let file = RunFile::defaults(parse_kind(&scenario)?);
            write!(out, "{}", emit_config(&file)).map_err(stdout)?;
        }
        Command::Run { common, check } => {
            let req = request(&common, load(&common)?)?;
            let outcome = commands::run(&req)?;
            for w in &outcome.manifest.warnings {
                writeln!(err, "warning: {w}").map_err(stdout)?;
            }
            print_files(out, &req, &outcome.manifest).map_err(stdout)?;
            if check {
                for c in &outcome.report.checks {
                    let verdict = if c.passed { "PASS" } else { "FAIL" };
                    writeln!(out, "{verdict} {}: {}", c.name, c.detail).map_err(stdout)?;
                }
                let failed = outcome.report.checks.iter().filter(|c| !c.passed).count();
                if failed > 0 {
                    return Err(CliError::Check(failed));
                }
            }
        }
        Command::SweepBinSize { common, time, widths } => {
            let mut file = load(&common)?;
            if let Some(t) = time {
                file.sweep.time = t;
            }
            if let Some(w) = widths {
                file.sweep.bin_widths = w;
            }
            let req = request(&common, file)?;
            let (manifest, report) = commands::sweep_bin_size(&req)?;
            for w in &manifest.warnings {
                writeln!(err, "warning: {w}").map_err(stdout)?;
            }
            print_files(out, &req, &manifest).map_err(stdout)?;
            for e in &report.entries {
                writeln!(
                    out,
                    "dx = {:<8} sum N = {:<10} sum N-bar = {:<14.1} visibility = {}",
                    e.delta_x,
                    e.total_raw,
                    e.total_recorded,
                    e.visibility.map_or("n/a".into(), |v| format!("{v:.3}"))
                )
                .map_err(stdout)?;
            }
        }
        Command::SweepBuildup {
            common,
            time,
            checkpoints,
        } => {
            let mut file = load(&common)?;
            if let Some(t) = time {
                file.sweep.time = t;
            }
            if let Some(c) = checkpoints {
                file.sweep.checkpoints = Some(c);
            }
            let req = request(&common, file)?;
            let (manifest, report) = commands::sweep_buildup(&req)?;
            for w in &manifest.warnings {
                writeln!(err, "warning: {w}").map_err(stdout)?;
            }
            print_files(out, &req, &manifest).map_err(stdout)?;
            for e in &report.entries {
                let vis = e.segment_visibility.or(e.visibility);
                writeln!(
                    out,
                    "N = {:<10} sum N-bar = {:<14.1} visibility = {}",
                    e.particles,
                    e.total_recorded,
                    vis.map_or("n/a".into(), |v| format!("{v:.3}"))
                )
                .map_err(stdout)?;
            }
        }
    }
    Ok(())
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{rendered}")
            } else {
                write!(out, "{rendered}")
            };
            return code;
        }
    };
    match execute(cli, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
