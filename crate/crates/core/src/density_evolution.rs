//! Density evolution for the condensed message-passing detectors.
//!
//! In the large-system limit the detector is summarized by four order
//! parameters. Starting from `M = Q = 0`,
//!
//! ```text
//! E' = 1 / (sigma^2 + beta (1 - Q + Upsilon))
//! F' = (beta (1 - 2M + Q) + sigma0^2) E'^2
//! M' = E[tanh(sqrt(F') z + E')],   Q' = E[tanh^2(sqrt(F') z + E')]
//! ```
//!
//! and the bit error rate at each step is `Phi(-E / sqrt F)`. The
//! error-minimizing choice `Upsilon = (sigma0^2 - sigma^2) / beta` removes
//! `sigma^2` from the recursion entirely. `Upsilon = 0` models a detector that
//! trusts its assumed noise level.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::TanhMoments;
use crate::stats::normal_cdf;

/// How the cross-replica term is chosen at each step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpsilonMode {
    /// `Upsilon = (sigma0^2 - sigma^2) / beta`.
    Optimal,
    /// A user-supplied constant.
    Fixed(f64),
    /// `Upsilon = 0`, the mismatched baseline.
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DEConfig {
    pub beta: f64,
    pub sigma0_sq: f64,
    pub sigma_sq: f64,
    pub mode: UpsilonMode,
    pub quadrature_order: usize,
    pub fixed_point_tol: f64,
    pub max_iters: usize,
    /// Upper bound on `E`; reached only as `sigma0^2 -> 0`.
    pub e_cap: f64,
}

impl DEConfig {
    pub fn new(beta: f64, sigma0_sq: f64, sigma_sq: f64, mode: UpsilonMode) -> Self {
        Self {
            beta,
            sigma0_sq,
            sigma_sq,
            mode,
            quadrature_order: 64,
            fixed_point_tol: 1e-12,
            max_iters: 10_000,
            e_cap: 1e12,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return bad(format!("beta must be positive, got {}", self.beta));
        }
        if !(self.sigma0_sq >= 0.0 && self.sigma_sq >= 0.0) {
            return bad("noise variances must be non-negative".into());
        }
        if !(self.fixed_point_tol > 0.0 && self.e_cap > 0.0) {
            return bad("tolerances must be positive".into());
        }
        if self.quadrature_order < 16 {
            return bad(format!(
                "quadrature order must be at least 16, got {}",
                self.quadrature_order
            ));
        }
        if let UpsilonMode::Fixed(v) = self.mode {
            if !v.is_finite() {
                return bad("fixed upsilon must be finite".into());
            }
        }
        Ok(())
    }

    /// The cross-replica term this config uses.
    pub fn upsilon(&self) -> f64 {
        match self.mode {
            UpsilonMode::Optimal => (self.sigma0_sq - self.sigma_sq) / self.beta,
            UpsilonMode::Fixed(v) => v,
            UpsilonMode::Zero => 0.0,
        }
    }
}

/// Macroscopic state after `t` updates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DEState {
    pub e: f64,
    pub f: f64,
    pub m: f64,
    pub q: f64,
    pub upsilon: f64,
    pub t: usize,
    /// Set once `E` has been clamped to the configured cap.
    pub at_boundary: bool,
}

impl DEState {
    /// `E = F = 0`, hence `M = Q = 0`.
    pub fn initial(upsilon: f64) -> Self {
        Self {
            e: 0.0,
            f: 0.0,
            m: 0.0,
            q: 0.0,
            upsilon,
            t: 0,
            at_boundary: false,
        }
    }

    /// Predicted bit error rate, taking limits where [`ber_theory`] is
    /// undefined: zero variance gives a deterministic decision.
    pub fn predicted_ber(&self) -> f64 {
        if self.at_boundary {
            return 0.0;
        }
        match ber_theory(self) {
            Ok(p) => p,
            Err(_) if self.e > 0.0 => 0.0,
            Err(_) => 1.0,
        }
    }
}

/// `P_b = Phi(-E / sqrt F)`.
///
/// `E = F = 0` returns 0.5. `F <= 0` with `E != 0` is a domain error.
pub fn ber_theory(state: &DEState) -> Result<f64> {
    if state.f > 0.0 {
        Ok(normal_cdf(-state.e / state.f.sqrt()))
    } else if state.f == 0.0 && state.e == 0.0 {
        Ok(0.5)
    } else {
        Err(Error::Domain(format!(
            "bit error rate needs F > 0, got E = {}, F = {}",
            state.e, state.f
        )))
    }
}

/// A configured recursion with its quadrature tables.
#[derive(Debug, Clone)]
pub struct DensityEvolution {
    config: DEConfig,
    moments: TanhMoments,
}

/// Result of iterating to stationarity.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedPoint {
    pub state: DEState,
    pub converged: bool,
    /// States `t = 0, 1, ...` including the initial one.
    pub trajectory: Vec<DEState>,
}

impl DensityEvolution {
    pub fn new(config: DEConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            moments: TanhMoments::new(config.quadrature_order),
            config,
        })
    }

    pub fn config(&self) -> &DEConfig {
        &self.config
    }

    pub fn initial_state(&self) -> DEState {
        DEState::initial(self.config.upsilon())
    }

    /// `(M, Q)` at the given field mean and variance.
    pub fn moments(&self, e: f64, f: f64) -> Result<(f64, f64)> {
        self.moments.moments(e, f)
    }

    /// The prefactor denominator `sigma^2 + beta (1 - Q + Upsilon)`.
    ///
    /// In optimal mode this is evaluated in the simplified form
    /// `sigma0^2 + beta (1 - Q)`, which is what it reduces to algebraically.
    pub fn denominator(&self, q: f64) -> f64 {
        let c = &self.config;
        match c.mode {
            UpsilonMode::Optimal => c.sigma0_sq + c.beta * (1.0 - q),
            _ => c.sigma_sq + c.beta * (1.0 - q + c.upsilon()),
        }
    }

    pub fn step(&self, state: &DEState) -> Result<DEState> {
        let c = &self.config;
        let den = self.denominator(state.q);
        if !(den >= 0.0) {
            return Err(Error::DegenerateParameters(format!(
                "prefactor denominator {den} at t = {}",
                state.t
            )));
        }
        let (e, at_boundary) = if den == 0.0 || 1.0 / den > c.e_cap {
            (c.e_cap, true)
        } else {
            (1.0 / den, false)
        };
        let f = ((c.beta * (1.0 - 2.0 * state.m + state.q) + c.sigma0_sq) * e * e).max(0.0);
        let (m, q) = self.moments.moments(e, f)?;
        Ok(DEState {
            e,
            f,
            m: m.clamp(-1.0, 1.0),
            q: q.clamp(0.0, 1.0),
            upsilon: c.upsilon(),
            t: state.t + 1,
            at_boundary,
        })
    }

    /// `steps` updates from the initial state; the result has `steps + 1`
    /// entries.
    pub fn trajectory(&self, steps: usize) -> Result<Vec<DEState>> {
        let mut out = Vec::with_capacity(steps + 1);
        out.push(self.initial_state());
        for _ in 0..steps {
            let next = self.step(out.last().expect("non-empty"))?;
            out.push(next);
        }
        Ok(out)
    }

    /// Iterates until every order parameter moves by less than the
    /// configured tolerance, or `max_iters` is exhausted.
    pub fn fixed_point(&self, init: DEState) -> Result<FixedPoint> {
        let mut trajectory = vec![init];
        let mut state = init;
        for _ in 0..self.config.max_iters {
            let next = self.step(&state)?;
            trajectory.push(next);
            let delta = [
                next.e - state.e,
                next.f - state.f,
                next.m - state.m,
                next.q - state.q,
            ]
            .iter()
            .fold(0.0f64, |acc, d| acc.max(d.abs()));
            state = next;
            if delta < self.config.fixed_point_tol {
                return Ok(FixedPoint {
                    state,
                    converged: true,
                    trajectory,
                });
            }
        }
        Ok(FixedPoint {
            state,
            converged: false,
            trajectory,
        })
    }
}

/// One-shot update with a freshly built quadrature table.
pub fn de_step(state: &DEState, config: &DEConfig) -> Result<DEState> {
    DensityEvolution::new(*config)?.step(state)
}

/// One-shot fixed-point search.
pub fn fixed_point(config: &DEConfig, init: DEState) -> Result<FixedPoint> {
    DensityEvolution::new(*config)?.fixed_point(init)
}

/// CSV with header `t,E,F,M,Q,Upsilon,P_b`, numbers at 17 significant digits.
pub fn trajectory_csv(states: &[DEState]) -> String {
    let mut out = String::from("t,E,F,M,Q,Upsilon,P_b\n");
    for s in states {
        writeln!(
            out,
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            s.t,
            s.e,
            s.f,
            s.m,
            s.q,
            s.upsilon,
            s.predicted_ber()
        )
        .expect("write to string");
    }
    out
}
