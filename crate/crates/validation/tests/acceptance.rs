//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.
//!
//! `cargo test -p phasecount-cli --test acceptance -- 3 5` runs criteria 3 and 5 only.

use std::f64::consts::PI;
use std::time::Instant;

use phasecount::reference::{
    compare, dominant_period, fringe_visibility, CnOptions, CompareOptions, ComparisonReport, ExactSingle,
    GaussianPacket, ImageWall, NumericWall, Observable, ReferenceModel, ReferenceProfile,
};
use phasecount::scenario::{
    build, run, sweep_bin_size, sweep_buildup, RunOptions, Scenario, ScenarioParams, DEFAULT_SEED,
};
use phasecount::{DensityProfile, DetectorArray, DetectorLayout, ScenarioConfig, ScenarioKind};

const Z_FRACTION: f64 = 0.01;
const RELATIVE_L2: f64 = 0.05;

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        passed,
        detail: detail.into(),
    }
}

fn scenario(kind: ScenarioKind, particles: u64, snapshots: Option<&[f64]>) -> Box<dyn Scenario> {
    let mut cfg = ScenarioConfig::defaults(kind);
    cfg.particles = particles;
    if let Some(times) = snapshots {
        cfg.snapshots = times.to_vec();
    }
    build(&cfg).expect("valid acceptance config")
}

fn profiles(sc: &dyn Scenario, options: &RunOptions) -> Vec<(DetectorArray, DensityProfile)> {
    let n = sc.config().particles;
    run(sc, options)
        .expect("run succeeds")
        .detectors
        .into_iter()
        .map(|d| {
            let p = d.density_profile(n);
            (d, p)
        })
        .collect()
}

/// Criterion-1 statistics: at most 1% of core bins beyond |z| = 3 and a
/// relative L2 error of at most 5%.
fn statistics(report: &ComparisonReport) -> (bool, String) {
    let ok = report.z_exceed_fraction <= Z_FRACTION && report.relative_l2 <= RELATIVE_L2;
    let text = format!(
        "t={} |z|>3 {:.2}% L2 {:.2}%",
        report.snapshot_time,
        100.0 * report.z_exceed_fraction,
        100.0 * report.relative_l2
    );
    (ok, text)
}

fn reference(model: &dyn ReferenceModel, profile: &DensityProfile) -> ReferenceProfile {
    model.profile(&profile.centers(), profile.snapshot_time)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let sc = scenario(ScenarioKind::SinglePacket, 1_000_000, Some(&[2.0, 4.0, 6.0, 8.0, 10.0]));
    let exact = sc.references().exact.expect("exact single reference");
    let mut passed = true;
    let mut parts = Vec::new();
    for (_, profile) in profiles(sc.as_ref(), &RunOptions::default()) {
        let report = compare(
            &profile,
            &reference(exact.as_ref(), &profile),
            &CompareOptions::default(),
        );
        let (ok, text) = statistics(&report);
        passed &= ok;
        parts.push(if ok { text } else { format!("{text} (out)") });
    }
    let elapsed = start.elapsed().as_secs_f64();
    passed &= elapsed < 120.0;
    verdict(passed, format!("{}; {elapsed:.1}s of 120s", parts.join(", ")))
}

fn criterion_2() -> Verdict {
    let start = Instant::now();
    let cfg = ScenarioConfig::defaults(ScenarioKind::SinglePacket);
    let ScenarioParams::SinglePacket(p) = cfg.params else {
        unreachable!()
    };
    let packet = GaussianPacket::minimum_spread(p.x0, p.v0, p.sigma_v);
    let exact = ExactSingle(packet);
    let approx = phasecount::reference::ApproxSingle { x0: p.x0, v0: p.v0 };
    let layout = DetectorLayout::new(cfg.detector.x_min, cfg.detector.x_max, cfg.detector.delta_x, 1).unwrap();
    let centers = layout.centers();
    let mut deviations = Vec::new();
    for t in [2.0, 4.0, 6.0, 8.0, 10.0] {
        let e = exact.profile(&centers, t).density();
        let a = approx.profile(&centers, t).density();
        let peak = e.iter().copied().fold(0.0, f64::max);
        let dev = e
            .iter()
            .zip(&a)
            .filter(|(e, _)| **e > 0.01 * peak)
            .map(|(e, a)| (a - e).abs() / e)
            .fold(0.0, f64::max);
        deviations.push((t, dev));
    }
    let decreasing = deviations.windows(2).all(|w| w[1].1 < w[0].1);
    let last = deviations[deviations.len() - 1].1;
    let elapsed = start.elapsed().as_secs_f64();
    let list: Vec<String> = deviations
        .iter()
        .map(|(t, d)| format!("t={t} {:.3}%", 100.0 * d))
        .collect();
    verdict(
        last <= 0.01 && decreasing && elapsed < 1.0,
        format!(
            "max relative deviation on the core {} (limit 1% at t=10, decreasing: {decreasing}); {elapsed:.2}s",
            list.join(", ")
        ),
    )
}

fn criterion_3() -> Verdict {
    let sc = scenario(ScenarioKind::TwoPackets, 2_000_000, Some(&[4.0]));
    let exact = sc.references().exact.expect("exact two reference");
    let (_, profile) = profiles(sc.as_ref(), &RunOptions::default()).remove(0);
    let reference = reference(exact.as_ref(), &profile);
    let window = Some((-5.0, 5.0));
    let recorded = compare(
        &profile,
        &reference,
        &CompareOptions {
            visibility_window: window,
            ..CompareOptions::default()
        },
    );
    let raw = compare(
        &profile,
        &reference,
        &CompareOptions {
            observable: Observable::Raw,
            visibility_window: window,
            ..CompareOptions::default()
        },
    );
    let (stats_ok, stats) = statistics(&recorded);
    let raw_ok = raw.max_abs_z <= 5.0;
    let vis_recorded = recorded.visibility_simulated.unwrap_or(f64::NAN);
    let vis_raw = raw.visibility_simulated.unwrap_or(f64::NAN);
    verdict(
        stats_ok && raw_ok && vis_recorded > 0.9 && vis_raw < 0.1,
        format!(
            "recorded vs exact {stats}; raw vs two-Gaussian sum max|z| {:.2} (limit 5); \
             visibility on ±5: recorded {vis_recorded:.4} (> 0.9), raw {vis_raw:.4} (< 0.1)",
            raw.max_abs_z
        ),
    )
}

fn criterion_4() -> Verdict {
    let start = Instant::now();
    let sc = scenario(ScenarioKind::TwoPackets, 2_000_000, Some(&[4.0]));
    let widths = [0.4, 0.1, 0.01];
    let arrays = sweep_bin_size(sc.as_ref(), 4.0, &widths, &RunOptions::default()).expect("sweep");
    let totals: Vec<f64> = arrays
        .iter()
        .map(|d| d.bins().map(|b| b.recorded_count()).sum())
        .collect();
    let coarse = arrays[0].density_profile(2_000_000);
    let visibility = fringe_visibility(&coarse.centers(), &coarse.recorded_density(), (-5.0, 5.0)).unwrap_or(f64::NAN);
    let ordered = totals[0] < totals[1] && totals[1] < totals[2];
    let elapsed = start.elapsed().as_secs_f64();
    verdict(
        ordered && visibility < 0.2 && elapsed < 180.0,
        format!(
            "ΣN̄ at δx=0.4/0.1/0.01: {:.0} / {:.0} / {:.0} (ascending: {ordered}); visibility at δx=0.4 {visibility:.4} (< 0.2); {elapsed:.1}s",
            totals[0], totals[1], totals[2]
        ),
    )
}

fn criterion_5() -> Verdict {
    let sc = scenario(ScenarioKind::Wall, 1_000_000, None);
    let ScenarioParams::Wall(p) = sc.config().params else {
        unreachable!()
    };
    let image = sc.references().exact.expect("image reference");
    let mut passed = true;
    let mut node = Vec::new();
    let mut stats = Vec::new();
    for (_, profile) in profiles(sc.as_ref(), &RunOptions::default()) {
        let density = profile.recorded_density();
        let peak = density.iter().copied().fold(0.0, f64::max);
        let near = density.iter().rev().take(2).copied().fold(0.0, f64::max) / peak;
        passed &= near < 0.02;
        node.push(format!("{:.2}%", 100.0 * near));
        if profile.snapshot_time >= 6.0 {
            let report = compare(
                &profile,
                &reference(image.as_ref(), &profile),
                &CompareOptions::default(),
            );
            let (ok, text) = statistics(&report);
            passed &= ok;
            stats.push(if ok { text } else { format!("{text} (out)") });
        }
    }

    let packet = GaussianPacket::minimum_spread(p.x0, p.v0, p.sigma_v);
    let image = ImageWall::new(packet, p.wall_x);
    let times = [0.1, 1.0, 2.0, 4.0, 6.0, 8.0, 10.0];
    let oracle = match NumericWall::solve(&packet, p.wall_x, &times, &CnOptions::default()) {
        Ok(numeric) => {
            let worst = times
                .iter()
                .enumerate()
                .map(|(s, &t)| {
                    (0..numeric.grid.points)
                        .map(|j| (numeric.states[s][j].norm_sqr() - image.density(numeric.grid.x(j), t)).abs())
                        .fold(0.0, f64::max)
                })
                .fold(0.0, f64::max);
            passed &= worst < 1e-3;
            format!("Crank-Nicolson vs images L∞ {worst:.2e} (< 1e-3)")
        }
        Err(e) => {
            passed = false;
            format!("Crank-Nicolson failed: {e}")
        }
    };
    verdict(
        passed,
        format!(
            "near-wall N̄ / peak {} (< 2%); vs images {}; {oracle}",
            node.join(" "),
            stats.join(", ")
        ),
    )
}

fn criterion_6() -> Verdict {
    let mut failures = Vec::new();
    let layout = DetectorLayout::new(0.0, 1.0, 1.0, 2).unwrap();

    let mut rng_state = 0x9e37_79b9_7f4a_7c15u64;
    let mut next = || {
        rng_state ^= rng_state << 13;
        rng_state ^= rng_state >> 7;
        rng_state ^= rng_state << 17;
        rng_state
    };
    for _ in 0..1000 {
        let n = 1 + next() % 5000;
        let phase = (next() % 1_000_000) as f64 / 1000.0 - 500.0;
        let mut d = DetectorArray::new(layout, 1.0);
        for _ in 0..n {
            d.record(0.5, phase, 0);
        }
        let recorded = d.bin(0).recorded_count();
        if (recorded - n as f64).abs() > 1e-9 * n as f64 {
            failures.push(format!("uniform phase: N̄ {recorded} vs N {n}"));
            break;
        }
        let mut d = DetectorArray::new(layout, 1.0);
        for _ in 0..n {
            d.record(0.5, phase, 0);
            d.record(0.5, phase + PI, 1);
        }
        let recorded = d.bin(0).recorded_count();
        if recorded > 1e-9 * n as f64 {
            failures.push(format!("π gap: N̄ {recorded} for n = {n}"));
            break;
        }
    }

    let mut bins = 0usize;
    for kind in ScenarioKind::ALL {
        let sc = scenario(kind, 300_000, None);
        for (det, _) in profiles(sc.as_ref(), &RunOptions::default()) {
            if det.binned() + det.overflow() + det.rejected() != 300_000 {
                failures.push(format!("{kind}: raw counts not conserved"));
            }
            for bin in det.bins() {
                bins += 1;
                if bin.recorded_count() > bin.coherent_bound() * (1.0 + 1e-12) + 1e-9 {
                    failures.push(format!("{kind}: N̄ above (Σ√N_k)² at {}", bin.center));
                }
            }
        }
    }

    let parts: Vec<DetectorArray> = [7u64, 8, 9]
        .iter()
        .map(|&seed| {
            let mut cfg = ScenarioConfig::defaults(ScenarioKind::TwoPackets);
            cfg.particles = 100_000;
            cfg.seed = seed;
            cfg.snapshots = vec![4.0];
            let sc = build(&cfg).unwrap();
            run(sc.as_ref(), &RunOptions::default()).unwrap().detectors.remove(0)
        })
        .collect();
    let left = DetectorArray::merged(&DetectorArray::merged(&parts[0], &parts[1]).unwrap(), &parts[2]).unwrap();
    let right = DetectorArray::merged(&parts[0], &DetectorArray::merged(&parts[1], &parts[2]).unwrap()).unwrap();
    let mut worst = 0.0f64;
    for (a, b) in left.bins().zip(right.bins()) {
        for (x, y) in a.channels.iter().zip(b.channels) {
            if x.count != y.count {
                failures.push("merge changed a count".into());
            }
            let scale = x.sum.norm().max(y.sum.norm()).max(1.0);
            worst = worst.max((x.sum - y.sum).norm() / scale);
        }
    }
    if worst > 1e-10 {
        failures.push(format!("merge associativity {worst:.1e}"));
    }
    failures.truncate(5);
    verdict(
        failures.is_empty(),
        format!(
            "uniform-phase and π-gap identities on 1000 random bins; bound and conservation on {bins} bins of 4 scenarios; \
             merge associativity {worst:.1e} (≤ 1e-10){}",
            if failures.is_empty() { String::new() } else { format!("; violations: {}", failures.join("; ")) }
        ),
    )
}

fn segment_visibility(det: &DetectorArray, particles: u64, pixels: usize) -> f64 {
    let segments = det.density_profile(particles).aggregate(pixels);
    let centers = segments.centers();
    fringe_visibility(
        &centers,
        &segments.recorded_density(),
        (centers[0], centers[centers.len() - 1]),
    )
    .unwrap_or(f64::NAN)
}

fn criterion_7() -> Verdict {
    let cfg = ScenarioConfig::defaults(ScenarioKind::DoubleSlit);
    let ScenarioParams::DoubleSlit(p) = cfg.params else {
        unreachable!()
    };
    let layout_ok = (p.wavelength - 842e-9).abs() < 1e-15
        && (cfg.detector.delta_x - 1e-6).abs() < 1e-15
        && (p.segment_width - 100e-6).abs() < 1e-15
        && p.segments == 28;
    let expected = p.geometry().unwrap().fringe_spacing();
    let pixels = (p.segment_width / cfg.detector.delta_x).round() as usize;

    let mut low = Vec::new();
    let mut high = Vec::new();
    let mut spacing = f64::NAN;
    for k in 0..5 {
        let mut c = cfg.clone();
        c.particles = 100_000;
        c.seed = DEFAULT_SEED + k;
        let sc = build(&c).unwrap();
        let states = sweep_buildup(sc.as_ref(), &[1000, 100_000], None).unwrap();
        low.push(segment_visibility(&states[0].detectors[0], 1000, pixels));
        high.push(segment_visibility(&states[1].detectors[0], 100_000, pixels));
        if k == 0 {
            let profile = states[1].detectors[0].density_profile(100_000);
            spacing = dominant_period(
                &profile.centers(),
                &profile.recorded_density(),
                0.5 * expected,
                2.0 * expected,
            )
            .unwrap_or(f64::NAN);
        }
    }
    let error = (spacing - expected).abs() / expected;
    let (m_low, m_high) = (median(low), median(high));
    verdict(
        layout_ok && error <= 0.02 && m_high > m_low,
        format!(
            "fringe spacing {:.2} μm vs λl/D {:.2} μm ({:.2}%, ≤ 2%); median segment visibility 10³ {m_low:.3} < 10⁵ {m_high:.3}",
            spacing * 1e6,
            expected * 1e6,
            100.0 * error
        ),
    )
}

fn criterion_8() -> Verdict {
    let mut identical = true;
    let mut worst = 0.0f64;
    for kind in ScenarioKind::ALL {
        let sc = scenario(kind, 300_000, None);
        let one = run(
            sc.as_ref(),
            &RunOptions {
                threads: Some(1),
                ..Default::default()
            },
        )
        .unwrap();
        let many = run(
            sc.as_ref(),
            &RunOptions {
                threads: Some(4),
                ..Default::default()
            },
        )
        .unwrap();
        for (a, b) in one.detectors.iter().zip(&many.detectors) {
            identical &= a.overflow() == b.overflow();
            for (x, y) in a.bins().zip(b.bins()) {
                for (p, q) in x.channels.iter().zip(y.channels) {
                    identical &= p.count == q.count;
                    let scale = p.sum.norm().max(1.0);
                    worst = worst.max((p.sum - q.sum).norm() / scale);
                }
            }
        }
    }

    let dir = tempfile::tempdir().unwrap();
    let mut files_equal = true;
    let outs: Vec<_> = ["1", "4"]
        .iter()
        .map(|t| dir.path().join(format!("threads_{t}")))
        .collect();
    for (threads, out) in ["1", "4"].iter().zip(&outs) {
        let args = [
            "phasecount",
            "run",
            "--scenario",
            "two_packets",
            "--particles",
            "300000",
            "--threads",
            threads,
            "--out",
            out.to_str().unwrap(),
        ];
        let code = phasecount_cli::main_with(args, &mut std::io::sink(), &mut std::io::sink());
        files_equal &= code == 0;
    }
    let mut compared = 0;
    for entry in std::fs::read_dir(&outs[0]).unwrap() {
        let name = entry.unwrap().file_name();
        if name.to_string_lossy().ends_with(".csv") {
            files_equal &= std::fs::read(outs[0].join(&name)).unwrap() == std::fs::read(outs[1].join(&name)).unwrap();
            compared += 1;
        }
    }
    verdict(
        identical && worst <= 1e-10 && files_equal,
        format!(
            "1 vs 4 workers on 4 scenarios: counts identical {identical}, complex sums max relative gap {worst:.1e} (≤ 1e-10); \
             {compared} CLI profile files byte-identical {files_equal}"
        ),
    )
}

/// Two-packet buildup at t = 4: visibility on the central ±5 window should
/// not fall as the particle count grows (medians over five seeds).
fn buildup_example() -> Verdict {
    let checkpoints = [1_000u64, 10_000, 100_000, 1_000_000, 10_000_000];
    let mut per_checkpoint = vec![Vec::new(); checkpoints.len()];
    for k in 0..5 {
        let mut cfg = ScenarioConfig::defaults(ScenarioKind::TwoPackets);
        cfg.particles = 10_000_000;
        cfg.seed = DEFAULT_SEED + k;
        cfg.snapshots = vec![4.0];
        let sc = build(&cfg).unwrap();
        for (i, state) in sweep_buildup(sc.as_ref(), &checkpoints, None)
            .unwrap()
            .iter()
            .enumerate()
        {
            let profile = state.detectors[0].density_profile(state.particles);
            let v = fringe_visibility(&profile.centers(), &profile.recorded_density(), (-5.0, 5.0)).unwrap_or(f64::NAN);
            per_checkpoint[i].push(v);
        }
    }
    let medians: Vec<f64> = per_checkpoint.into_iter().map(median).collect();
    let ordered = medians.windows(2).all(|w| w[1] >= w[0]);
    let list: Vec<String> = checkpoints
        .iter()
        .zip(&medians)
        .map(|(n, m)| format!("{n}: {m:.5}"))
        .collect();
    verdict(ordered, format!("median visibility {}", list.join(", ")))
}

type Criterion = (&'static str, &'static str, fn() -> Verdict);

fn main() {
    let criteria: [Criterion; 9] = [
        ("1", "single packet vs exact", criterion_1),
        ("2", "analytic approximation", criterion_2),
        ("3", "two-packet interference", criterion_3),
        ("4", "bin-size phenomenology", criterion_4),
        ("5", "wall", criterion_5),
        ("6", "detector identities", criterion_6),
        ("7", "double slit", criterion_7),
        ("8", "determinism", criterion_8),
        ("buildup", "two-packet buildup ordering", buildup_example),
    ];
    let selected: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    let mut ran = 0;
    for (id, name, check) in criteria {
        if !selected.is_empty() && !selected.iter().any(|s| s == id) {
            continue;
        }
        let start = Instant::now();
        let v = check();
        ran += 1;
        if !v.passed {
            failed += 1;
        }
        println!(
            "{} [{id}] {name}: {} ({:.1}s)",
            if v.passed { "PASS" } else { "FAIL" },
            v.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} of {ran} passed", ran - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
