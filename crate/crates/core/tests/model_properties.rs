use std::f64::consts::{FRAC_PI_4, PI};

use phasecount::model::{particle_rng, sample_velocity, WallChannel};
use phasecount::scenario::{build, Hit, ScenarioConfig, ScenarioKind, SinglePacket};
use phasecount::{Particle, VelocityDistribution};
use proptest::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

const EPS: f64 = f64::EPSILON;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn action_phase_agrees_with_the_displacement_form(
        x0 in -50.0f64..50.0,
        v in -20.0f64..20.0,
        t in 0.01f64..20.0,
    ) {
        let p = Particle::new(x0, v, -FRAC_PI_4, 0);
        let d = p.position_free(t) - x0;
        let from_path = d * d / (2.0 * t) - FRAC_PI_4;
        // rounding of x0 + v t carries an absolute error of order ε|x0|
        // into the displacement, hence the |v x0| term
        let scale = 0.5 * v * v * t + (v * x0).abs() + FRAC_PI_4;
        prop_assert!((p.phase_free(t) - from_path).abs() <= 10.0 * EPS * scale);
    }

    #[test]
    fn reflection_is_the_mirror_trajectory_plus_pi(
        x0 in -50.0f64..-0.1,
        v in 0.1f64..20.0,
        t in 0.0f64..20.0,
        wall in -5.0f64..5.0,
    ) {
        let x0 = x0 + wall;
        let p = Particle::new(x0, v, -FRAC_PI_4, 0);
        let state = p.evolve_with_wall(t, wall);
        if state.channel == WallChannel::Reflected {
            let mirror = Particle::new(2.0 * wall - x0, -v, -FRAC_PI_4, 0);
            let tol = 8.0 * EPS * (x0.abs() + (v * t).abs() + wall.abs());
            prop_assert!((state.position - mirror.position_free(t)).abs() <= tol.max(EPS));
            let gap = state.phase - mirror.phase_free(t);
            prop_assert!((gap - PI).abs() <= 4.0 * EPS * state.phase.abs().max(PI));
        } else {
            prop_assert_eq!(state.position, p.position_free(t));
            prop_assert_eq!(state.phase, p.phase_free(t));
        }
    }

    #[test]
    fn wall_confines(
        x0 in -100.0f64..-1e-9,
        v in -50.0f64..50.0,
        t in 0.0f64..100.0,
        wall in -10.0f64..10.0,
    ) {
        let p = Particle::new(x0 + wall, v, 0.0, 0);
        prop_assert!(p.evolve_with_wall(t, wall).position <= wall);
    }
}

#[test]
fn wall_confines_a_hundred_thousand_random_particles() {
    use rand::Rng;
    let mut rng = particle_rng(3, 0);
    for _ in 0..100_000 {
        let wall = rng.random_range(-10.0..10.0);
        let x0 = wall - rng.random_range(1e-9..100.0);
        let v = rng.random_range(-50.0..50.0);
        let t = rng.random_range(0.0..100.0);
        let s = Particle::new(x0, v, 0.0, 0).evolve_with_wall(t, wall);
        assert!(s.position <= wall, "x0={x0} v={v} t={t} wall={wall} -> {}", s.position);
    }
}

#[test]
fn sample_moments_of_a_million_draws() {
    let dist = VelocityDistribution::new(5.0, 1.0, 1.0).unwrap();
    let n = 1_000_000u64;
    let draws: Vec<f64> = (0..n)
        .map(|i| sample_velocity(&dist, &mut particle_rng(17, i)))
        .collect();
    let mean = draws.iter().sum::<f64>() / n as f64;
    let var = draws.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    assert!((mean - 5.0).abs() < 0.01, "{mean}");
    assert!((var.sqrt() - 1.0).abs() < 0.01, "{}", var.sqrt());
}

#[test]
fn velocities_pass_kolmogorov_smirnov() {
    let dist = VelocityDistribution::new(-5.0, 1.0, 1.0).unwrap();
    let n = 100_000usize;
    let mut draws: Vec<f64> = (0..n as u64)
        .map(|i| sample_velocity(&dist, &mut particle_rng(2024, i)))
        .collect();
    draws.sort_by(f64::total_cmp);
    let normal = Normal::new(-5.0, 1.0).unwrap();
    let d = draws
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = normal.cdf(v);
            (f - i as f64 / n as f64).max((i + 1) as f64 / n as f64 - f)
        })
        .fold(0.0, f64::max);
    // asymptotic critical value at the 1% level
    let critical = 1.628 / (n as f64).sqrt();
    assert!(d < critical, "D = {d}, critical {critical}");
}

#[test]
fn scenario_velocities_are_seed_deterministic() {
    let cfg = ScenarioConfig::defaults(ScenarioKind::SinglePacket);
    let a = SinglePacket::new(cfg.clone()).unwrap();
    let b = SinglePacket::new(cfg.clone()).unwrap();
    for i in 0..10_000 {
        assert_eq!(a.particle(i).velocity.to_bits(), b.particle(i).velocity.to_bits());
    }
    let mut other = cfg;
    other.seed += 1;
    let c = SinglePacket::new(other).unwrap();
    assert!((0..100).any(|i| a.particle(i).velocity != c.particle(i).velocity));
}

#[test]
fn every_scenario_traces_identically_on_rebuild() {
    for kind in ScenarioKind::ALL {
        let cfg = ScenarioConfig::defaults(kind);
        let (a, b) = (build(&cfg).unwrap(), build(&cfg).unwrap());
        let (mut ha, mut hb) = (Vec::<Hit>::new(), Vec::<Hit>::new());
        for i in 0..2000 {
            a.trace(i, &cfg.snapshots, &mut ha);
            b.trace(i, &cfg.snapshots, &mut hb);
        }
        let bits = |h: &[Hit]| {
            h.iter()
                .map(|h| (h.x.to_bits(), h.phase.to_bits(), h.channel))
                .collect::<Vec<_>>()
        };
        assert_eq!(bits(&ha), bits(&hb), "{kind}");
    }
}
