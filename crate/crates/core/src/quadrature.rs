//! Gaussian expectations `E[f(sqrt(F) z + E)]` with `z ~ N(0, 1)`.
//!
//! [`GaussHermite`] handles smooth integrands. The density-evolution moments
//! `E[tanh]` and `E[tanh^2]` need more care: `tanh` has poles at
//! `u = i pi/2`, which in the standard-normal variable sit only
//! `pi / (2 sqrt F)` away from the real axis, so a fixed Gauss-Hermite rule
//! loses accuracy as the variance grows (around `1e-3` at `F = 10` with
//! 64 nodes). [`TanhMoments`] switches to an integrated-by-parts form for
//! large variances:
//!
//! ```text
//! E[tanh u]   = 1 - ∫ sech^2(u) Phi((u - E)/sqrt F) du
//! E[tanh^2 u] = 1 - ∫ sech^2(u) phi_F(u - E) du
//! ```
//!
//! Both integrands are analytic in a strip of half-width `pi/2` whatever `F`
//! is, and decay like `exp(-2|u|)`, so the trapezoidal rule on the real line
//! converges geometrically.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::stats::normal_cdf;

/// Gauss-Hermite rule rescaled to the standard normal weight.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussHermite {
    /// Builds the `order`-point rule. Panics if `order` is zero.
    pub fn new(order: usize) -> Self {
        assert!(order > 0, "quadrature order must be positive");
        let (t, w) = hermite_nodes(order);
        let nodes = t.iter().map(|t| t * std::f64::consts::SQRT_2).collect();
        let weights = w.iter().map(|w| w / PI.sqrt()).collect();
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Standard-normal nodes.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Weights summing to one.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `E[f(sqrt(variance) z + mean)]`.
    pub fn expectation<F>(&self, f: F, mean: f64, variance: f64) -> Result<f64>
    where
        F: Fn(f64) -> f64,
    {
        check_variance(variance)?;
        let sd = variance.sqrt();
        Ok(self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(z, w)| w * f(sd * z + mean))
            .sum())
    }
}

fn check_variance(variance: f64) -> Result<()> {
    if variance >= 0.0 && !variance.is_nan() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "variance must be non-negative, got {variance}"
        )))
    }
}

/// Nodes and weights for the physicists' weight `exp(-t^2)`, by Newton
/// iteration on the orthonormal Hermite recurrence.
fn hermite_nodes(n: usize) -> (Vec<f64>, Vec<f64>) {
    let pim4 = PI.powf(-0.25);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    let nf = n as f64;
    let mut z = 0.0f64;
    for i in 0..m {
        // initial guesses for the largest roots, then extrapolate inward
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = pim4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    // ascending order
    x.reverse();
    w.reverse();
    (x, w)
}

/// Variance above which [`TanhMoments`] uses the trapezoidal form.
pub const TRAPEZOID_THRESHOLD: f64 = 0.25;
const TRAPEZOID_STEP: f64 = 0.2;
const TRAPEZOID_HALF_WIDTH: usize = 100;

/// Evaluates `(E[tanh u], E[tanh^2 u])` for `u ~ N(mean, variance)`.
#[derive(Debug, Clone)]
pub struct TanhMoments {
    rule: GaussHermite,
    grid: Vec<(f64, f64)>,
}

impl TanhMoments {
    pub fn new(order: usize) -> Self {
        let grid = (-(TRAPEZOID_HALF_WIDTH as i64)..=TRAPEZOID_HALF_WIDTH as i64)
            .map(|j| {
                let u = j as f64 * TRAPEZOID_STEP;
                let sech = 1.0 / u.cosh();
                (u, TRAPEZOID_STEP * sech * sech)
            })
            .collect();
        Self {
            rule: GaussHermite::new(order),
            grid,
        }
    }

    pub fn rule(&self) -> &GaussHermite {
        &self.rule
    }

    /// Returns `(M, Q)`.
    pub fn moments(&self, mean: f64, variance: f64) -> Result<(f64, f64)> {
        check_variance(variance)?;
        if variance == 0.0 {
            let t = mean.tanh();
            return Ok((t, t * t));
        }
        if variance <= TRAPEZOID_THRESHOLD {
            let sd = variance.sqrt();
            let (mut m, mut q) = (0.0, 0.0);
            for (z, w) in self.rule.nodes.iter().zip(&self.rule.weights) {
                let t = (sd * z + mean).tanh();
                m += w * t;
                q += w * t * t;
            }
            return Ok((m, q));
        }
        let sd = variance.sqrt();
        let norm = 1.0 / (2.0 * PI * variance).sqrt();
        let (mut cdf_part, mut pdf_part) = (0.0, 0.0);
        for &(u, w) in &self.grid {
            let s = (u - mean) / sd;
            cdf_part += w * normal_cdf(s);
            pdf_part += w * norm * (-0.5 * s * s).exp();
        }
        Ok((1.0 - cdf_part, 1.0 - pdf_part))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_normalized_and_symmetric() {
        for order in [1, 2, 5, 16, 64, 101] {
            let gh = GaussHermite::new(order);
            let sum: f64 = gh.weights().iter().sum();
            assert!((sum - 1.0).abs() < 1e-13, "order {order}: {sum}");
            for i in 0..order {
                assert!((gh.nodes()[i] + gh.nodes()[order - 1 - i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn polynomial_moments_exact() {
        let gh = GaussHermite::new(16);
        assert!((gh.expectation(|_| 1.0, 0.7, 2.3).unwrap() - 1.0).abs() < 1e-14);
        assert!((gh.expectation(|x| x, 0.7, 2.3).unwrap() - 0.7).abs() < 1e-13);
        // E[x^2] = E^2 + F, E[z^4] = 3
        assert!((gh.expectation(|x| x * x, 0.7, 2.3).unwrap() - (0.49 + 2.3)).abs() < 1e-12);
        assert!((gh.expectation(|x| x.powi(4), 0.0, 1.0).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn negative_variance_is_domain_error() {
        let gh = GaussHermite::new(8);
        assert!(matches!(
            gh.expectation(|x| x, 0.0, -1.0),
            Err(Error::Domain(_))
        ));
        assert!(TanhMoments::new(16).moments(0.0, f64::NAN).is_err());
    }

    #[test]
    fn zero_variance_is_point_mass() {
        let tm = TanhMoments::new(64);
        let (m, q) = tm.moments(0.8, 0.0).unwrap();
        assert_eq!(m, 0.8f64.tanh());
        assert_eq!(q, m * m);
    }

    #[test]
    fn branches_agree_at_threshold() {
        let tm = TanhMoments::new(64);
        let below = tm.moments(1.3, TRAPEZOID_THRESHOLD).unwrap();
        let above = tm
            .moments(1.3, TRAPEZOID_THRESHOLD * (1.0 + 1e-12))
            .unwrap();
        assert!((below.0 - above.0).abs() < 1e-12);
        assert!((below.1 - above.1).abs() < 1e-12);
    }
}
