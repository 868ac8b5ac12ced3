//! Deterministic parallel execution.
//!
//! The particle index range is cut into fixed chunks of [`CHUNK`] indices.
//! Each chunk fills its own fresh detectors, and finished chunks are merged
//! into the running total strictly in index order. Neither the chunk
//! boundaries nor the merge order depend on the worker count, so results are
//! bit-identical however many threads run them.
//!
//! A buildup checkpoint that falls inside a chunk is served from a copy of
//! the running total plus a separately filled partial chunk; the main merge
//! chain is untouched, so asking for checkpoints never changes the final
//! arrays.

use std::ops::Range;

use rayon::prelude::*;

use crate::detector::{DetectorArray, DetectorLayout};

use super::{Hit, Scenario, ScenarioError};

/// Particle indices per work unit.
pub const CHUNK: u64 = 1 << 16;

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses the global rayon pool.
    pub threads: Option<usize>,
    /// Ascending particle counts at which to keep a copy of the detectors.
    pub checkpoints: Vec<u64>,
}

/// Detector state after the first `particles` particles.
#[derive(Clone, Debug)]
pub struct Checkpoint {
    pub particles: u64,
    /// One array per snapshot time (per layout, layout-major, for
    /// [`run_layouts`]).
    pub detectors: Vec<DetectorArray>,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub particles: u64,
    /// One array per configured snapshot time.
    pub detectors: Vec<DetectorArray>,
    pub checkpoints: Vec<Checkpoint>,
}

#[derive(Clone, Debug)]
pub struct LayoutRun {
    pub particles: u64,
    /// `detectors[l][s]`: layout `l`, time `s`.
    pub detectors: Vec<Vec<DetectorArray>>,
    pub checkpoints: Vec<Checkpoint>,
}

struct Engine<'a> {
    scenario: &'a dyn Scenario,
    times: &'a [f64],
    layouts: &'a [DetectorLayout],
}

impl Engine<'_> {
    fn fresh(&self) -> Vec<DetectorArray> {
        self.layouts
            .iter()
            .flat_map(|layout| self.times.iter().map(|&t| DetectorArray::new(*layout, t)))
            .collect()
    }

    fn fill(&self, range: Range<u64>) -> Vec<DetectorArray> {
        let mut arrays = self.fresh();
        let mut hits: Vec<Hit> = Vec::with_capacity(self.times.len());
        let per_layout = self.times.len();
        for index in range {
            hits.clear();
            self.scenario.trace(index, self.times, &mut hits);
            debug_assert_eq!(hits.len(), per_layout);
            for (s, hit) in hits.iter().enumerate() {
                for l in 0..self.layouts.len() {
                    arrays[l * per_layout + s]
                        .record_with(hit.x, hit.channel, |center| self.scenario.phase_in_bin(hit, center));
                }
            }
        }
        arrays
    }

    fn absorb(total: &mut [DetectorArray], part: &[DetectorArray]) {
        for (t, p) in total.iter_mut().zip(part) {
            t.merge(p).expect("arrays share one geometry");
        }
    }

    fn execute(&self, budget: u64, checkpoints: &[u64], batch: usize) -> (Vec<DetectorArray>, Vec<Checkpoint>) {
        let chunks = budget.div_ceil(CHUNK);
        let bounds = |i: u64| i * CHUNK..((i + 1) * CHUNK).min(budget);
        let mut total = self.fresh();
        let mut snapshots = Vec::with_capacity(checkpoints.len());
        let mut pending = checkpoints.iter().copied().peekable();

        let mut next = 0u64;
        while next < chunks {
            let end = (next + batch as u64).min(chunks);
            let parts: Vec<Vec<DetectorArray>> = (next..end).into_par_iter().map(|i| self.fill(bounds(i))).collect();
            for (i, part) in (next..end).zip(parts) {
                let range = bounds(i);
                while let Some(m) = pending.next_if(|&m| m <= range.start) {
                    snapshots.push(Checkpoint {
                        particles: m,
                        detectors: total.clone(),
                    });
                }
                while let Some(m) = pending.next_if(|&m| m < range.end) {
                    let mut partial = total.clone();
                    Self::absorb(&mut partial, &self.fill(range.start..m));
                    snapshots.push(Checkpoint {
                        particles: m,
                        detectors: partial,
                    });
                }
                Self::absorb(&mut total, &part);
            }
            next = end;
        }
        for m in pending {
            snapshots.push(Checkpoint {
                particles: m,
                detectors: total.clone(),
            });
        }
        (total, snapshots)
    }
}

fn validate_checkpoints(checkpoints: &[u64], budget: u64) -> Result<(), ScenarioError> {
    if checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ScenarioError::Checkpoints(format!(
            "must be strictly ascending, got {checkpoints:?}"
        )));
    }
    if let Some(&last) = checkpoints.last() {
        if last > budget {
            return Err(ScenarioError::Checkpoints(format!(
                "{last} exceeds the particle budget {budget}"
            )));
        }
    }
    Ok(())
}

fn with_pool<T: Send>(threads: Option<usize>, job: impl FnOnce(usize) -> T + Send) -> Result<T, ScenarioError> {
    match threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| ScenarioError::ThreadPool(e.to_string()))?;
            Ok(pool.install(|| job(rayon::current_num_threads())))
        }
        None => Ok(job(rayon::current_num_threads())),
    }
}

/// Runs `scenario` over several detector layouts and times at once, feeding
/// every layout the identical particle stream.
pub fn run_layouts(
    scenario: &dyn Scenario,
    times: &[f64],
    layouts: &[DetectorLayout],
    budget: u64,
    options: &RunOptions,
) -> Result<LayoutRun, ScenarioError> {
    validate_checkpoints(&options.checkpoints, budget)?;
    if let Some(bad) = layouts.iter().find(|l| l.channels != scenario.channels()) {
        return Err(ScenarioError::invalid(
            "detector",
            format!(
                "layout has {} channels, scenario needs {}",
                bad.channels,
                scenario.channels()
            ),
        ));
    }
    let engine = Engine {
        scenario,
        times,
        layouts,
    };
    let (flat, checkpoints) = with_pool(options.threads, |threads| {
        engine.execute(budget, &options.checkpoints, 2 * threads.max(1))
    })?;
    let per_layout = times.len().max(1);
    let mut detectors = Vec::with_capacity(layouts.len());
    let mut flat = flat.into_iter();
    for _ in layouts {
        detectors.push(flat.by_ref().take(per_layout).collect());
    }
    Ok(LayoutRun {
        particles: budget,
        detectors,
        checkpoints,
    })
}

/// Runs the scenario's configured budget, layout and snapshot times.
pub fn run(scenario: &dyn Scenario, options: &RunOptions) -> Result<RunOutput, ScenarioError> {
    let cfg = scenario.config();
    let layout = scenario.layout();
    let mut out = run_layouts(scenario, &cfg.snapshots, &[layout], cfg.particles, options)?;
    Ok(RunOutput {
        particles: out.particles,
        detectors: out.detectors.pop().unwrap_or_default(),
        checkpoints: out.checkpoints,
    })
}

/// Detectors at one time for several bin widths over the same domain, all
/// fed the identical particle stream.
pub fn sweep_bin_size(
    scenario: &dyn Scenario,
    time: f64,
    widths: &[f64],
    options: &RunOptions,
) -> Result<Vec<DetectorArray>, ScenarioError> {
    let geometry = scenario.config().detector;
    let layouts = widths
        .iter()
        .map(|&dx| DetectorLayout::new(geometry.x_min, geometry.x_max, dx, scenario.channels()))
        .collect::<Result<Vec<_>, _>>()?;
    let options = RunOptions {
        threads: options.threads,
        checkpoints: Vec::new(),
    };
    let out = run_layouts(scenario, &[time], &layouts, scenario.config().particles, &options)?;
    Ok(out.detectors.into_iter().flatten().collect())
}

/// Detector states at each checkpoint of a single pass over the budget.
pub fn sweep_buildup(
    scenario: &dyn Scenario,
    checkpoints: &[u64],
    threads: Option<usize>,
) -> Result<Vec<Checkpoint>, ScenarioError> {
    let options = RunOptions {
        threads,
        checkpoints: checkpoints.to_vec(),
    };
    Ok(run(scenario, &options)?.checkpoints)
}
