//! The replicated single-variable landscape
//!
//! ```text
//! Phi(x; h, g) = -(x - h)^2 / (2g) + ln cosh x
//! ```
//!
//! whose maxima dominate the marginal posterior of one bit when the number
//! of replicas is large. Stationary points solve `x = h + g tanh x`. For
//! `g <= 1` there is a single maximum. For `g > 1` and small `|h|` there are
//! two, near `±x0` where `x0 = g tanh x0`, and the pair is weighted by `a±`.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::roots::safeguarded_newton;

/// Zero-field peaks closer than this to the origin count as merged.
pub const MERGE_THRESHOLD: f64 = 1e-6;
const ROOT_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaddleProblem {
    /// External field.
    pub h: f64,
    /// Rescaled cross-replica coupling, positive.
    pub g: f64,
    /// Replica count; only the product `n m h` is ever used.
    pub n: f64,
}

impl SaddleProblem {
    pub fn new(h: f64, g: f64, n: f64) -> Self {
        assert!(g > 0.0, "coupling g must be positive, got {g}");
        Self { h, g, n }
    }

    /// `Phi'(x)`.
    pub fn slope(&self, x: f64) -> f64 {
        -(x - self.h) / self.g + x.tanh()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Single,
    Double,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Single => "single",
            Regime::Double => "double",
        }
    }
}

/// Maxima of `Phi` and their weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakSet {
    /// One maximum, or `[x_plus, x_minus]`.
    pub positions: Vec<f64>,
    /// Matching weights; `[a_plus, a_minus]` in the double regime.
    pub weights: Vec<f64>,
    /// Zero-field peak position `x0` (zero when `g <= 1`).
    pub x0: f64,
    /// `m = tanh(x0)`.
    pub magnetization: f64,
    pub regime: Regime,
    /// Small-field expansion `±x0 + g h / (g + x0^2 - g^2)`, double regime
    /// only.
    pub approx_positions: Option<[f64; 2]>,
}

/// `ln cosh x` without overflow.
pub fn ln_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

pub fn phi(x: f64, p: &SaddleProblem) -> f64 {
    -(x - p.h).powi(2) / (2.0 * p.g) + ln_cosh(x)
}

/// Positive root of `x = g tanh x`, or zero when `g <= 1`.
pub fn zero_field_peak(g: f64) -> Result<f64> {
    if g <= 1.0 {
        return Ok(0.0);
    }
    // the nonzero root lies in (x_c, g] where cosh^2 x_c = g
    let xc = g.sqrt().acosh();
    let root = safeguarded_newton(
        |x| (g * x.tanh() - x, g / x.cosh().powi(2) - 1.0),
        xc,
        g,
        ROOT_TOL,
        200,
    )?;
    Ok(root)
}

/// Stationary point of `Phi` on `[lo, hi]`, where `h + g tanh x - x` changes
/// sign.
fn stationary(p: &SaddleProblem, lo: f64, hi: f64) -> Result<f64> {
    let (h, g) = (p.h, p.g);
    safeguarded_newton(
        |x| (h + g * x.tanh() - x, g / x.cosh().powi(2) - 1.0),
        lo,
        hi,
        ROOT_TOL,
        200,
    )
}

/// Locates the maxima of `Phi`.
///
/// Roots of `G(x) = h + g tanh x - x` lie in `[-B, B]` with `B = g + |h| + 1`.
/// When `g > 1`, `G` turns at `±x_c` with `cosh^2 x_c = g`, and the maxima
/// of `Phi` are the roots on the two outer monotone pieces.
pub fn peak_positions(p: &SaddleProblem) -> Result<PeakSet> {
    let (h, g) = (p.h, p.g);
    let bound = g + h.abs() + 1.0;
    let x0 = zero_field_peak(g)?;
    let magnetization = x0.tanh();
    let big = |x: f64| h + g * x.tanh() - x;

    let mut right = None;
    let mut left = None;
    if g <= 1.0 {
        let x = stationary(p, -bound, bound)?;
        if x >= 0.0 {
            right = Some(x);
        } else {
            left = Some(x);
        }
    } else {
        let xc = g.sqrt().acosh();
        if big(xc) >= 0.0 {
            right = Some(stationary(p, xc, bound)?);
        }
        if big(-xc) <= 0.0 {
            left = Some(stationary(p, -bound, -xc)?);
        }
    }

    let (a_plus, a_minus) = replica_weights(p, magnetization);
    let merged = g <= 1.0 || (h == 0.0 && x0 < MERGE_THRESHOLD);
    match (right, left) {
        (Some(xp), Some(xm)) if !merged => {
            let shift = g * h / (g + x0 * x0 - g * g);
            Ok(PeakSet {
                positions: vec![xp, xm],
                weights: vec![a_plus, a_minus],
                x0,
                magnetization,
                regime: Regime::Double,
                approx_positions: Some([x0 + shift, -x0 + shift]),
            })
        }
        (r, l) => {
            let x = match (r, l) {
                (Some(xp), Some(_)) => {
                    // merged pitchfork: both roots sit at the origin
                    if h >= 0.0 {
                        xp
                    } else {
                        l.expect("left root")
                    }
                }
                (Some(x), None) | (None, Some(x)) => x,
                (None, None) => unreachable!("G(-B) > 0 > G(B), so a root always exists"),
            };
            Ok(PeakSet {
                positions: vec![x],
                weights: vec![1.0],
                x0,
                magnetization,
                regime: Regime::Single,
                approx_positions: None,
            })
        }
    }
}

/// `a± = exp(∓ n m h) / (exp(n m h) + exp(-n m h))`, in logistic form.
/// A positive `n m h` suppresses `a_plus`.
pub fn replica_weights(p: &SaddleProblem, m: f64) -> (f64, f64) {
    let s = 2.0 * p.n * m * p.h;
    let a_plus = 1.0 / (1.0 + s.exp());
    let a_minus = 1.0 / (1.0 + (-s).exp());
    (a_plus, a_minus)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeCell {
    pub g: f64,
    pub h: f64,
    pub regime: Regime,
    pub x0: f64,
    pub m: f64,
    pub a_plus: f64,
}

/// Evenly spaced grid including both endpoints.
pub fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => vec![],
        1 => vec![lo],
        _ => (0..points)
            .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
            .collect(),
    }
}

/// Classifies every `(g, h)` on a rectangular grid, `g` outermost.
pub fn regime_scan(
    g_range: (f64, f64),
    h_range: (f64, f64),
    g_points: usize,
    h_points: usize,
    n: f64,
) -> Result<Vec<RegimeCell>> {
    let hs = linspace(h_range.0, h_range.1, h_points);
    let mut cells = Vec::with_capacity(g_points * h_points);
    for g in linspace(g_range.0, g_range.1, g_points) {
        for &h in &hs {
            let p = SaddleProblem::new(h, g, n);
            let peaks = peak_positions(&p)?;
            cells.push(RegimeCell {
                g,
                h,
                regime: peaks.regime,
                x0: peaks.x0,
                m: peaks.magnetization,
                a_plus: replica_weights(&p, peaks.magnetization).0,
            });
        }
    }
    Ok(cells)
}

/// First `g` on the grid classified as double at field `h`.
pub fn locate_transition(h: f64, g_range: (f64, f64), points: usize) -> Result<Option<f64>> {
    for g in linspace(g_range.0, g_range.1, points) {
        if peak_positions(&SaddleProblem::new(h, g, 1.0))?.regime == Regime::Double {
            return Ok(Some(g));
        }
    }
    Ok(None)
}

/// CSV with header `g,h,regime,x0,m,a_plus`.
pub fn scan_csv(cells: &[RegimeCell]) -> String {
    let mut out = String::from("g,h,regime,x0,m,a_plus\n");
    for c in cells {
        writeln!(
            out,
            "{:.16e},{:.16e},{},{:.16e},{:.16e},{:.16e}",
            c.g,
            c.h,
            c.regime.as_str(),
            c.x0,
            c.m,
            c.a_plus
        )
        .expect("write to string");
    }
    out
}
