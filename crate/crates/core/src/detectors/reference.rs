//! Non-iterative reference detectors.

use crate::channel::SpreadingSystem;
use crate::error::{Error, Result};

use super::{finish_single_shot, DetectorOutput};

/// Largest user count [`exact_mpm`] will enumerate.
pub const MAX_EXACT_USERS: usize = 20;

/// Correlates each user's code with the received chips:
/// `m_k = clamp((1/sqrt N) sum_mu s_{mu k} y_mu, -1, 1)`.
pub fn matched_filter(sys: &SpreadingSystem) -> DetectorOutput {
    let (k, n) = (sys.num_users(), sys.spreading_factor());
    let mut corr = vec![0.0; k];
    for (mu, y) in sys.received().iter().enumerate() {
        for (c, s) in corr.iter_mut().zip(sys.chips().row(mu)) {
            *c += s * y;
        }
    }
    let scale = 1.0 / (n as f64).sqrt();
    let mags = corr.iter().map(|c| (c * scale).clamp(-1.0, 1.0)).collect();
    finish_single_shot(sys, mags)
}

/// Exact posterior means by enumerating all `2^K` bit vectors:
///
/// ```text
/// P(b | y) ∝ exp(-sum_mu (y_mu - (1/sqrt N) sum_k s_{mu k} b_k)^2 / (2 sigma^2))
/// ```
///
/// Bit vectors are visited in Gray-code order so each step flips one bit and
/// updates the integer products `S b` exactly.
pub fn exact_mpm(sys: &SpreadingSystem, sigma_sq: f64) -> Result<DetectorOutput> {
    let (k, n) = (sys.num_users(), sys.spreading_factor());
    if k > MAX_EXACT_USERS {
        return Err(Error::Capacity {
            users: k,
            max: MAX_EXACT_USERS,
        });
    }
    if !(sigma_sq > 0.0) {
        return Err(Error::Config(format!(
            "posterior noise variance must be positive, got {sigma_sq}"
        )));
    }
    let chips = sys.chips();
    let y = sys.received();
    let scale = 1.0 / (n as f64).sqrt();

    let mut bits = vec![1i8; k];
    let mut products: Vec<i64> = (0..n)
        .map(|mu| (0..k).map(|kk| i64::from(chips.get(mu, kk))).sum())
        .collect();
    let log_weight = |products: &[i64]| -> f64 {
        let energy: f64 = products
            .iter()
            .zip(y)
            .map(|(&c, y)| (y - c as f64 * scale).powi(2))
            .sum();
        -energy / (2.0 * sigma_sq)
    };

    // running log-sum-exp: z = sum exp(lw - peak), acc_k = sum b_k exp(lw - peak)
    let mut peak = log_weight(&products);
    let mut z = 1.0;
    let mut acc = vec![1.0; k];
    for i in 1u64..(1u64 << k) {
        let flip = i.trailing_zeros() as usize;
        let old = i64::from(bits[flip]);
        for (mu, c) in products.iter_mut().enumerate() {
            *c -= 2 * old * i64::from(chips.get(mu, flip));
        }
        bits[flip] = -bits[flip];

        let lw = log_weight(&products);
        if lw > peak {
            let r = (peak - lw).exp();
            z *= r;
            acc.iter_mut().for_each(|a| *a *= r);
            peak = lw;
        }
        let w = (lw - peak).exp();
        z += w;
        for (a, &b) in acc.iter_mut().zip(&bits) {
            *a += f64::from(b) * w;
        }
    }
    let mags = acc.iter().map(|a| (a / z).clamp(-1.0, 1.0)).collect();
    Ok(finish_single_shot(sys, mags))
}
