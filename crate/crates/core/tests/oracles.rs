//! Checks against independent reference computations.
//!
//! The frozen constants were computed with 40-digit arithmetic (bisection,
//! adaptive quadrature and a direct iteration of the order-parameter
//! recursion) before the library code existed.

#![allow(clippy::excessive_precision)]

use cdma_mp::density_evolution::{ber_theory, DEConfig, DEState, DensityEvolution, UpsilonMode};
use cdma_mp::quadrature::{GaussHermite, TanhMoments};
use cdma_mp::saddle::{
    locate_transition, peak_positions, phi, replica_weights, zero_field_peak, Regime, SaddleProblem,
};

const X0_G2: f64 = 1.915_008_048_154_537_5;
const CDF_MINUS_SQRT2: f64 = 0.078_649_603_525_142_565;
const TANH_E1_F1: f64 = 0.550_400_490_793_327_17;
const MISMATCH_E_STAR: f64 = 3.696_928_643_284_565_1;
const MISMATCH_M_STAR: f64 = 0.918_020_771_846_391_70;
const MISMATCH_PB_STAR: f64 = 0.027_256_362_917_729_427;
const MISMATCH_E2: f64 = 3.249_342_640_705_234_6;
const MISMATCH_E3: f64 = 3.613_413_390_031_787_6;

mod oracle {
    const XGK: [f64; 8] = [
        0.991_455_371_120_812_639,
        0.949_107_912_342_758_525,
        0.864_864_423_359_769_073,
        0.741_531_185_599_394_440,
        0.586_087_235_467_691_130,
        0.405_845_151_377_397_167,
        0.207_784_955_007_898_468,
        0.0,
    ];
    const WGK: [f64; 8] = [
        0.022_935_322_010_529_225,
        0.063_092_092_629_978_553,
        0.104_790_010_322_250_184,
        0.140_653_259_715_525_919,
        0.169_004_726_639_267_903,
        0.190_350_578_064_785_410,
        0.204_432_940_075_298_892,
        0.209_482_141_084_727_828,
    ];
    const WG: [f64; 4] = [
        0.129_484_966_168_869_693,
        0.279_705_391_489_276_668,
        0.381_830_050_505_118_945,
        0.417_959_183_673_469_388,
    ];

    fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let fc = f(c);
        let mut k = WGK[7] * fc;
        let mut g = WG[3] * fc;
        for i in 0..7 {
            let pair = f(c - h * XGK[i]) + f(c + h * XGK[i]);
            k += WGK[i] * pair;
            if i % 2 == 1 {
                g += WG[i / 2] * pair;
            }
        }
        (k * h, ((k - g) * h).abs())
    }

    /// Adaptive Gauss-Kronrod 7-15.
    pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (est, err) = kronrod(f, a, b);
        if err <= tol || depth == 0 {
            return est;
        }
        let m = 0.5 * (a + b);
        integrate(f, a, m, 0.5 * tol, depth - 1) + integrate(f, m, b, 0.5 * tol, depth - 1)
    }

    /// `E[f(sqrt(F) z + E)]` by adaptive integration over `z in [-12, 12]`,
    /// split where the argument crosses zero.
    pub fn gaussian<F: Fn(f64) -> f64>(f: F, e: f64, var: f64) -> f64 {
        if var == 0.0 {
            return f(e);
        }
        let sd = var.sqrt();
        let g = |z: f64| f(sd * z + e) * (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let z0 = -e / sd;
        let (lo, hi) = (-12.0, 12.0);
        if z0 > lo && z0 < hi {
            integrate(&g, lo, z0, 1e-15, 40) + integrate(&g, z0, hi, 1e-15, 40)
        } else {
            integrate(&g, lo, hi, 1e-15, 40)
        }
    }

    /// `erfc(t)` for `t >= 0`: Maclaurin series of erf below 2.5, Lentz
    /// continued fraction above.
    pub fn erfc(t: f64) -> f64 {
        assert!(t >= 0.0);
        let sqrt_pi = std::f64::consts::PI.sqrt();
        if t < 2.5 {
            let mut term = t;
            let mut sum = t;
            let mut n = 0.0;
            loop {
                n += 1.0;
                term *= -t * t / n;
                let add = term / (2.0 * n + 1.0);
                sum += add;
                if add.abs() < 1e-18 {
                    break;
                }
            }
            1.0 - 2.0 / sqrt_pi * sum
        } else {
            // erfc(t) = exp(-t^2)/sqrt(pi) * 1/(t + (1/2)/(t + 1/(t + (3/2)/(t + ...))))
            let tiny = 1e-300;
            let mut f = t;
            let mut c = t;
            let mut d = 0.0;
            for k in 1..500 {
                let a = k as f64 / 2.0;
                d = t + a * d;
                if d.abs() < tiny {
                    d = tiny;
                }
                c = t + a / c;
                if c.abs() < tiny {
                    c = tiny;
                }
                d = 1.0 / d;
                let delta = c * d;
                f *= delta;
                if (delta - 1.0).abs() < 1e-16 {
                    break;
                }
            }
            (-t * t).exp() / sqrt_pi / f
        }
    }

    pub fn normal_cdf(x: f64) -> f64 {
        if x <= 0.0 {
            0.5 * erfc(-x / std::f64::consts::SQRT_2)
        } else {
            1.0 - 0.5 * erfc(x / std::f64::consts::SQRT_2)
        }
    }

    /// Plain bisection on a sign change.
    pub fn bisect<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
        let fa = f(a);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if (f(m) > 0.0) == (fa > 0.0) {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    }
}

#[test]
fn oracle_self_checks() {
    assert!((oracle::gaussian(|_| 1.0, 0.3, 2.0) - 1.0).abs() < 1e-14);
    assert!((oracle::gaussian(f64::tanh, 1.0, 1.0) - TANH_E1_F1).abs() < 1e-14);
    assert!((oracle::normal_cdf(-2f64.sqrt()) - CDF_MINUS_SQRT2).abs() < 1e-15);
    assert!((oracle::normal_cdf(-5.0) - 2.866_515_718_791_939e-7).abs() < 1e-20);
    assert!((oracle::bisect(|x| x - 2.0 * x.tanh(), 1.0, 3.0) - X0_G2).abs() < 1e-15);
}

#[test]
fn gaussian_expectation_examples() {
    let gh = GaussHermite::new(64);
    for (e, f) in [(0.0, 1.0), (1.5, 0.3), (-2.0, 7.0)] {
        assert!((gh.expectation(|_| 1.0, e, f).unwrap() - 1.0).abs() < 1e-14);
        assert!((gh.expectation(|x| x, e, f).unwrap() - e).abs() < 1e-13);
    }
    let tm = TanhMoments::new(64);
    let (m, q) = tm.moments(1.0, 1.0).unwrap();
    assert!((m - TANH_E1_F1).abs() < 1e-12);
    assert!((q - TANH_E1_F1).abs() < 1e-12);
}

#[test]
fn tanh_moments_match_adaptive_oracle_on_grid() {
    let tm = TanhMoments::new(64);
    let mut worst = 0.0f64;
    for i in 0..=20 {
        for j in 0..=20 {
            let e = 0.5 * i as f64;
            let f = 0.5 * j as f64;
            let (m, q) = tm.moments(e, f).unwrap();
            let m_ref = oracle::gaussian(f64::tanh, e, f);
            let q_ref = oracle::gaussian(|u| u.tanh().powi(2), e, f);
            worst = worst.max((m - m_ref).abs()).max((q - q_ref).abs());
        }
    }
    assert!(worst < 1e-10, "worst deviation {worst:e}");
}

#[test]
fn plain_gauss_hermite_is_fine_for_small_variance() {
    let gh = GaussHermite::new(64);
    for e in [0.0, 0.7, 3.0] {
        for f in [0.01, 0.1, 0.25] {
            let got = gh.expectation(f64::tanh, e, f).unwrap();
            assert!((got - oracle::gaussian(f64::tanh, e, f)).abs() < 1e-12);
        }
    }
}

#[test]
fn doubling_quadrature_order_is_stable() {
    let lo = TanhMoments::new(64);
    let hi = TanhMoments::new(128);
    for (e, f) in [(0.5, 0.05), (2.0, 0.2), (3.7, 3.7), (8.0, 9.0)] {
        let a = lo.moments(e, f).unwrap();
        let b = hi.moments(e, f).unwrap();
        assert!((a.0 - b.0).abs() < 1e-10 && (a.1 - b.1).abs() < 1e-10);
    }
}

#[test]
fn ber_theory_matches_cdf_oracle() {
    let mut s = DEState::initial(0.0);
    s.e = 2.0;
    s.f = 2.0;
    let p = ber_theory(&s).unwrap();
    assert!((p - CDF_MINUS_SQRT2).abs() < 1e-15);
    for (e, f) in [(0.3, 1.0), (4.0, 0.5), (1.0, 9.0), (6.0, 1.0)] {
        s.e = e;
        s.f = f;
        let want = oracle::normal_cdf(-e / f64::sqrt(f));
        assert!((ber_theory(&s).unwrap() - want).abs() <= 1e-14 * want.max(1e-300) + 1e-300);
    }
}

#[test]
fn mismatch_fixed_point_matches_reference() {
    let de = DensityEvolution::new(DEConfig::new(0.25, 0.25, 0.01, UpsilonMode::Optimal)).unwrap();
    let traj = de.trajectory(3).unwrap();
    assert_eq!(traj[1].e, 2.0);
    assert!((traj[2].e - MISMATCH_E2).abs() < 1e-11);
    assert!((traj[3].e - MISMATCH_E3).abs() < 1e-11);
    let fp = de.fixed_point(de.initial_state()).unwrap();
    assert!(fp.converged);
    let s = fp.state;
    assert!((s.e - MISMATCH_E_STAR).abs() < 1e-10, "E* = {}", s.e);
    assert!((s.m - MISMATCH_M_STAR).abs() < 1e-10);
    assert!((s.predicted_ber() - MISMATCH_PB_STAR).abs() < 1e-11);
    assert!((s.e - s.f).abs() < 1e-8 && (s.q - s.m).abs() < 1e-8);
}

#[test]
fn saddle_references() {
    let x0 = zero_field_peak(2.0).unwrap();
    assert!((x0 - X0_G2).abs() < 1e-12);
    let peaks = peak_positions(&SaddleProblem::new(0.0, 2.0, 1.0)).unwrap();
    assert_eq!(peaks.regime, Regime::Double);
    assert!((peaks.positions[0] - X0_G2).abs() < 1e-12);

    // x = 100 would overflow a naive cosh path
    let v = phi(100.0, &SaddleProblem::new(0.0, 2.0, 1.0));
    assert!((v - (-2500.0 + 100.0 - std::f64::consts::LN_2)).abs() < 1e-9);

    let p = SaddleProblem::new(0.5, 2.0, 1.0);
    let (ap, am) = replica_weights(&p, 1.0);
    assert!((ap - 0.268_941_421_369_995_12).abs() < 1e-15);
    assert!((ap + am - 1.0).abs() < 1e-15);
    assert_eq!(
        replica_weights(&SaddleProblem::new(0.0, 2.0, 7.0), 0.9),
        (0.5, 0.5)
    );
}

#[test]
fn small_field_roots_follow_expansion() {
    for h in [0.01, 0.005, 0.0025] {
        let p = SaddleProblem::new(h, 2.0, 1.0);
        let peaks = peak_positions(&p).unwrap();
        let approx = peaks.approx_positions.unwrap();
        // exact roots from the oracle bisection on each side
        let g = |x: f64| h + 2.0 * x.tanh() - x;
        let xc = 2f64.sqrt().acosh();
        let right = oracle::bisect(g, xc, 4.0);
        let left = oracle::bisect(g, -4.0, -xc);
        assert!((peaks.positions[0] - right).abs() < 1e-12);
        assert!((peaks.positions[1] - left).abs() < 1e-12);
        // the perturbative error shrinks like h^2
        assert!((right - approx[0]).abs() < 20.0 * h * h);
        assert!((left - approx[1]).abs() < 20.0 * h * h);
    }
}

#[test]
fn transition_at_unit_coupling() {
    let resolution = 1e-3;
    let g = locate_transition(0.0, (0.5, 1.5), 1001).unwrap().unwrap();
    assert!((g - 1.0).abs() <= resolution + 1e-12, "transition at {g}");
    // uniform slices
    for g in [0.1, 0.5, 0.9, 1.0] {
        assert_eq!(
            peak_positions(&SaddleProblem::new(0.0, g, 1.0))
                .unwrap()
                .regime,
            Regime::Single
        );
    }
    for g in [1.01, 1.5, 4.0] {
        assert_eq!(
            peak_positions(&SaddleProblem::new(0.0, g, 1.0))
                .unwrap()
                .regime,
            Regime::Double
        );
    }
}
