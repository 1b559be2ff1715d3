//! Multiuser detectors.
//!
//! * [`DetectorKind::Improved`]: condensed message passing whose prefactor is
//!   built from the received power, so it needs no noise estimate.
//! * [`DetectorKind::Original`]: the same iteration with a prefactor built
//!   from an assumed noise variance.
//! * [`DetectorKind::Matched`]: single-user correlation receiver.
//! * [`DetectorKind::Exact`]: brute-force posterior means, for small `K`.
//!
//! Hard decisions use `sign(0) = +1`.

mod message;
mod reference;

pub use message::{
    improved_mp_step, mp_step, original_mp_step, MessageState, Prefactor, StepOptions,
};
pub use reference::{exact_mpm, matched_filter, MAX_EXACT_USERS};

use serde::{Deserialize, Serialize};

use crate::channel::SpreadingSystem;
use crate::error::{ensure_len, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DetectorKind {
    Improved,
    Original { sigma_sq: f64 },
    Matched,
    Exact { sigma_sq: f64 },
}

impl DetectorKind {
    pub fn name(&self) -> &'static str {
        match self {
            DetectorKind::Improved => "improved",
            DetectorKind::Original { .. } => "original",
            DetectorKind::Matched => "matched",
            DetectorKind::Exact { .. } => "exact",
        }
    }

    pub fn is_iterative(&self) -> bool {
        matches!(self, DetectorKind::Improved | DetectorKind::Original { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub max_iters: usize,
    /// Stop once `D^t` drops below this.
    pub conv_threshold: f64,
    pub step: StepOptions,
    /// Record the bit error rate against the transmitted bits.
    pub track_ber: bool,
}

impl RunOptions {
    pub fn new(max_iters: usize, conv_threshold: f64) -> Self {
        Self {
            max_iters,
            conv_threshold,
            step: StepOptions::default(),
            track_ber: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        if !(self.conv_threshold > 0.0) {
            return Err(Error::Config(format!(
                "convergence threshold must be positive, got {}",
                self.conv_threshold
            )));
        }
        self.step.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorOutput {
    pub magnetizations: Vec<f64>,
    pub hard_bits: Vec<i8>,
    pub iterations_run: usize,
    /// `D^t` for `t = 1..=iterations_run`.
    pub d_trace: Vec<f64>,
    /// Bit error rate after each iteration.
    pub ber_trace: Option<Vec<f64>>,
    pub converged: bool,
}

/// `sign(m)` with `sign(0) = +1`.
pub fn hard_decision(m: f64) -> i8 {
    if m >= 0.0 {
        1
    } else {
        -1
    }
}

pub fn hard_decisions(mags: &[f64]) -> Vec<i8> {
    mags.iter().map(|&m| hard_decision(m)).collect()
}

/// `D = (1/K) |m^t - m^{t-1}|^2`.
pub fn convergence_metric(prev: &[f64], curr: &[f64]) -> Result<f64> {
    ensure_len(prev.len(), curr.len())?;
    if curr.is_empty() {
        return Ok(0.0);
    }
    let sum: f64 = prev.iter().zip(curr).map(|(a, b)| (b - a) * (b - a)).sum();
    Ok(sum / curr.len() as f64)
}

/// Fraction of positions where the decisions differ from the truth.
pub fn bit_error_rate(hard_bits: &[i8], true_bits: &[i8]) -> Result<f64> {
    ensure_len(true_bits.len(), hard_bits.len())?;
    for (i, &b) in hard_bits.iter().chain(true_bits).enumerate() {
        if b != 1 && b != -1 {
            return Err(Error::NotAntipodal {
                index: i % hard_bits.len().max(1),
                value: i64::from(b),
            });
        }
    }
    if hard_bits.is_empty() {
        return Ok(0.0);
    }
    let errors = hard_bits
        .iter()
        .zip(true_bits)
        .filter(|(a, b)| a != b)
        .count();
    Ok(errors as f64 / hard_bits.len() as f64)
}

fn finish_single_shot(sys: &SpreadingSystem, mags: Vec<f64>) -> DetectorOutput {
    let hard_bits = hard_decisions(&mags);
    let d = convergence_metric(&vec![0.0; mags.len()], &mags).expect("equal lengths");
    let ber = bit_error_rate(&hard_bits, sys.bits()).expect("validated bits");
    DetectorOutput {
        magnetizations: mags,
        hard_bits,
        iterations_run: 1,
        d_trace: vec![d],
        ber_trace: Some(vec![ber]),
        converged: true,
    }
}

/// Runs a detector to convergence or until `max_iters`.
pub fn run_detector(
    sys: &SpreadingSystem,
    kind: DetectorKind,
    opts: &RunOptions,
) -> Result<DetectorOutput> {
    opts.validate()?;
    let mut out = match kind {
        DetectorKind::Matched => matched_filter(sys),
        DetectorKind::Exact { sigma_sq } => exact_mpm(sys, sigma_sq)?,
        DetectorKind::Improved | DetectorKind::Original { .. } => {
            return run_iterative(sys, kind, opts, |_| {})
        }
    };
    if !opts.track_ber {
        out.ber_trace = None;
    }
    Ok(out)
}

/// Like [`run_detector`] for the iterative kinds, calling `observe` with the
/// state after every update.
pub fn run_iterative<O>(
    sys: &SpreadingSystem,
    kind: DetectorKind,
    opts: &RunOptions,
    mut observe: O,
) -> Result<DetectorOutput>
where
    O: FnMut(&MessageState),
{
    opts.validate()?;
    let prefactor = match kind {
        DetectorKind::Improved => Prefactor::EmpiricalPower,
        DetectorKind::Original { sigma_sq } => {
            if !(sigma_sq >= 0.0) {
                return Err(Error::Config(format!(
                    "assumed noise variance must be non-negative, got {sigma_sq}"
                )));
            }
            Prefactor::AssumedNoise {
                sigma_sq,
                upsilon: 0.0,
            }
        }
        other => {
            return Err(Error::Config(format!(
                "{} is not an iterative detector",
                other.name()
            )))
        }
    };
    let mut state = MessageState::zeros(sys);
    let mut d_trace = Vec::new();
    let mut ber_trace = Vec::new();
    let mut converged = false;
    for _ in 0..opts.max_iters {
        let next = mp_step(&state, sys, prefactor, &opts.step)?;
        let d = convergence_metric(state.magnetizations(), next.magnetizations())?;
        d_trace.push(d);
        if opts.track_ber {
            let bits = hard_decisions(next.magnetizations());
            ber_trace.push(bit_error_rate(&bits, sys.bits())?);
        }
        observe(&next);
        state = next;
        if d < opts.conv_threshold {
            converged = true;
            break;
        }
    }
    let magnetizations = state.magnetizations().to_vec();
    Ok(DetectorOutput {
        hard_bits: hard_decisions(&magnetizations),
        magnetizations,
        iterations_run: d_trace.len(),
        d_trace,
        ber_trace: opts.track_ber.then_some(ber_trace),
        converged,
    })
}
