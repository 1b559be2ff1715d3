//! The message update checked against a literal evaluation of
//! `A (y_mu s_mu / sqrt N - beta (P_mu - I/K) m_mu)` with explicit matrices.

#![allow(clippy::needless_range_loop)]

use cdma_mp::channel::{SignMatrix, SpreadingSystem, SystemConfig};
use cdma_mp::detectors::{improved_mp_step, mp_step, MessageState, Prefactor, StepOptions};
use proptest::prelude::*;

fn hand_instance() -> SpreadingSystem {
    let cfg = SystemConfig::new(2, 4, 0.25);
    let chips = SignMatrix::from_signs(4, 2, &[1, 1, 1, -1, -1, 1, 1, 1]).unwrap();
    SpreadingSystem::from_parts(cfg, chips, vec![1, -1], vec![0.3, -0.2, 0.5, 0.1]).unwrap()
}

/// Direct transcription. Cavity magnetizations are summed explicitly over
/// `nu != mu`.
fn transcribed_step(sys: &SpreadingSystem, mhat: &[f64]) -> Vec<f64> {
    let (k, n) = (sys.num_users(), sys.spreading_factor());
    let beta = k as f64 / n as f64;
    let s = |mu: usize, kk: usize| f64::from(sys.chips().get(mu, kk));
    let mut cav = vec![vec![0.0; k]; n];
    for mu in 0..n {
        for kk in 0..k {
            let field: f64 = (0..n)
                .filter(|&nu| nu != mu)
                .map(|nu| mhat[nu * k + kk])
                .sum();
            cav[mu][kk] = field.tanh();
        }
    }
    let q = cav.iter().flatten().map(|m| m * m).sum::<f64>() / (n * k) as f64;
    let power = sys.received().iter().map(|y| y * y).sum::<f64>() / n as f64;
    let a = 1.0 / (power - beta * q);
    let mut out = vec![0.0; n * k];
    for mu in 0..n {
        // P_mu - I/K as an explicit K x K matrix
        let mut p = vec![vec![0.0; k]; k];
        for i in 0..k {
            for j in 0..k {
                p[i][j] =
                    s(mu, i) * s(mu, j) / k as f64 - if i == j { 1.0 / k as f64 } else { 0.0 };
            }
        }
        for i in 0..k {
            let pm: f64 = (0..k).map(|j| p[i][j] * cav[mu][j]).sum();
            let matched = sys.received()[mu] * s(mu, i) / (n as f64).sqrt();
            out[mu * k + i] = a * (matched - beta * pm);
        }
    }
    out
}

#[test]
fn hand_instance_matches_transcription() {
    let sys = hand_instance();
    let mhat0 = vec![0.4, -0.3, 0.1, 0.25, -0.2, 0.05, 0.35, -0.15];
    let state = MessageState::from_messages(2, 4, mhat0.clone(), true, 0).unwrap();
    let next = improved_mp_step(&state, &sys, &StepOptions::default()).unwrap();
    let want = transcribed_step(&sys, &mhat0);
    for (got, want) in next.messages().iter().zip(&want) {
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }
    // and from the zero state the interference term vanishes
    let next = improved_mp_step(&MessageState::zeros(&sys), &sys, &StepOptions::default()).unwrap();
    let want = transcribed_step(&sys, &[0.0; 8]);
    for (got, want) in next.messages().iter().zip(&want) {
        assert!((got - want).abs() < 1e-12);
    }
}

fn random_system(k: usize, n: usize, seed: u64) -> SpreadingSystem {
    cdma_mp::channel::sample_system(
        SystemConfig::new(k, n, 0.25),
        cdma_mp::rng::RngSeed::new(seed, 0),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn transcription_on_random_instances(
        seed in 0u64..1000,
        k in 1usize..6,
        n in 2usize..9,
        scale in 0.01f64..0.8,
    ) {
        let sys = random_system(k, n, seed);
        let mhat: Vec<f64> = (0..n * k).map(|i| scale * (((i * 7 + seed as usize) % 11) as f64 - 5.0) / 5.0).collect();
        let state = MessageState::from_messages(k, n, mhat.clone(), true, 0).unwrap();
        match improved_mp_step(&state, &sys, &StepOptions::default()) {
            Ok(next) => {
                let want = transcribed_step(&sys, &mhat);
                for (g, w) in next.messages().iter().zip(&want) {
                    prop_assert!((g - w).abs() < 1e-10 * (1.0 + w.abs()));
                }
            }
            // small random instances can have Q beta above the received power
            Err(cdma_mp::Error::DegenerateStatistics { .. }) => {}
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        }
    }

    /// Replacing the received power by sigma^2 + beta (1 - Q + Upsilon) + beta Q
    /// turns the improved update into the general one with that Upsilon.
    #[test]
    fn power_substitution_reproduces_general_update(
        seed in 0u64..1000,
        sigma_sq in 0.0f64..0.5,
        sigma0_sq in 0.0f64..0.5,
        scale in 0.0f64..1.0,
    ) {
        let sys = random_system(6, 20, seed);
        let beta = sys.load();
        let mhat: Vec<f64> = (0..120).map(|i| scale * ((i as f64 * 0.37 + seed as f64).sin())).collect();
        let state = MessageState::from_messages(6, 20, mhat, true, 3).unwrap();
        let q = state.self_overlap();
        let upsilon = (sigma0_sq - sigma_sq) / beta;
        let power = sigma_sq + beta * (1.0 - q + upsilon) + beta * q;
        let opts = StepOptions::default();
        let a = mp_step(&state, &sys, Prefactor::ReceivedPower(power), &opts);
        let b = mp_step(&state, &sys, Prefactor::AssumedNoise { sigma_sq, upsilon }, &opts);
        match (a, b) {
            (Ok(a), Ok(b)) => {
                for (x, y) in a.messages().iter().zip(b.messages()) {
                    prop_assert!((x - y).abs() < 1e-12, "{} vs {}", x, y);
                }
            }
            (Err(_), Err(_)) => {}
            (a, b) => return Err(TestCaseError::fail(format!("{a:?} vs {b:?}"))),
        }
    }
}
