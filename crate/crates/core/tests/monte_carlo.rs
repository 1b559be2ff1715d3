//! Statistical checks over many sampled trials.

use std::time::Instant;

use cdma_mp::channel::{empirical_signal_power, sample_system, SystemConfig};
use cdma_mp::detectors::{
    exact_mpm, improved_mp_step, matched_filter, run_detector, DetectorKind, MessageState,
    RunOptions, StepOptions,
};
use cdma_mp::rng::RngSeed;
use cdma_mp::stats::RunningStats;

#[test]
fn received_chips_have_zero_mean() {
    let cfg = SystemConfig::new(500, 2000, 0.25);
    let means: RunningStats = (0..1000)
        .map(|t| {
            let sys = sample_system(cfg, RngSeed::new(2024, t)).unwrap();
            sys.received().iter().sum::<f64>() / 2000.0
        })
        .collect();
    assert!(
        means.mean().abs() < 3.0 * means.std_error(),
        "{} ± {}",
        means.mean(),
        means.std_error()
    );
}

#[test]
fn received_power_concentrates_at_load_plus_noise() {
    let cfg = SystemConfig::from_load(0.25, 2000, 0.25).unwrap();
    let mut stats = RunningStats::new();
    for t in 0..1000 {
        let p = empirical_signal_power(&sample_system(cfg, RngSeed::new(99, t)).unwrap());
        assert!((p - 0.5).abs() < 0.05, "trial {t}: {p}");
        stats.push(p);
    }
    assert!((stats.mean() - 0.5).abs() < 3.0 * stats.std_error());
}

#[test]
fn power_variance_scales_inversely_with_spreading() {
    let var = |n: usize| {
        let cfg = SystemConfig::from_load(0.25, n, 0.25).unwrap();
        (0..1000)
            .map(|t| empirical_signal_power(&sample_system(cfg, RngSeed::new(5, t)).unwrap()))
            .collect::<RunningStats>()
            .variance()
    };
    let ratio = var(250) / var(1000);
    assert!((3.0..5.3).contains(&ratio), "variance ratio {ratio}");
}

#[test]
fn exact_detector_recovers_noiseless_bits() {
    let cfg = SystemConfig::new(8, 64, 0.0);
    let mut perfect = 0;
    for t in 0..1000 {
        let sys = sample_system(cfg, RngSeed::new(8, t)).unwrap();
        let out = exact_mpm(&sys, 0.01).unwrap();
        if out.hard_bits == sys.bits() {
            perfect += 1;
        }
    }
    assert!(perfect >= 990, "{perfect} / 1000");
}

#[test]
fn matched_filter_is_worse_than_improved() {
    let cfg = SystemConfig::from_load(0.25, 200, 0.25).unwrap();
    let (mut mf, mut mp) = (RunningStats::new(), RunningStats::new());
    for t in 0..1000 {
        let sys = sample_system(cfg, RngSeed::new(31, t)).unwrap();
        mf.push(*matched_filter(&sys).ber_trace.unwrap().last().unwrap());
        let out = run_detector(&sys, DetectorKind::Improved, &RunOptions::new(30, 1e-8)).unwrap();
        mp.push(*out.ber_trace.unwrap().last().unwrap());
    }
    let gap = mf.mean() - mp.mean();
    let se = (mf.std_error().powi(2) + mp.std_error().powi(2)).sqrt();
    assert!(
        gap > 3.0 * se,
        "matched {} vs improved {}",
        mf.mean(),
        mp.mean()
    );
}

#[test]
fn improved_detector_noiseless_low_load() {
    let cfg = SystemConfig::from_load(0.125, 800, 0.0).unwrap();
    let sys = sample_system(cfg, RngSeed::new(1, 0)).unwrap();
    let out = run_detector(&sys, DetectorKind::Improved, &RunOptions::new(50, 1e-10)).unwrap();
    assert_eq!(out.hard_bits, sys.bits());
}

/// Four times the users at fixed load is sixteen times the work.
#[test]
fn step_cost_scales_with_chip_user_product() {
    let time_steps = |k: usize| {
        let cfg = SystemConfig::new(k, 4 * k, 0.25);
        let sys = sample_system(cfg, RngSeed::new(3, 0)).unwrap();
        let mut state = MessageState::zeros(&sys);
        state = improved_mp_step(&state, &sys, &StepOptions::default()).unwrap();
        let reps = 40_000 / k;
        let mut best = f64::INFINITY;
        for _ in 0..5 {
            let start = Instant::now();
            for _ in 0..reps {
                std::hint::black_box(
                    improved_mp_step(&state, &sys, &StepOptions::default()).unwrap(),
                );
            }
            best = best.min(start.elapsed().as_secs_f64() / reps as f64);
        }
        best
    };
    let small = time_steps(50);
    let large = time_steps(200);
    let ratio = large / small;
    assert!((8.0..=32.0).contains(&ratio), "time ratio {ratio}");
}
