//! Condensed message-passing updates.
//!
//! Each chip `mu` sends user `k` the message
//!
//! ```text
//! mhat_{mu k} = A * ( y_mu s_{mu k} / sqrt N - beta ((P_mu - I/K) m_mu)_k )
//! ```
//!
//! with `(P_mu)_{kl} = s_{mu k} s_{mu l} / K`. Since `beta / K = 1 / N`, the
//! bracket is `s_{mu k} (y_mu - sum_{l != k} s_{mu l} m_{mu l} / sqrt N) / sqrt N`:
//! the chip's residual after cancelling every other user's estimated
//! contribution. Magnetizations follow from `m_k = tanh(sum_mu mhat_{mu k})`.
//!
//! The detectors differ only in the prefactor `A`, see [`Prefactor`].

use crate::channel::SpreadingSystem;
use crate::error::{ensure_len, Error, Result};

/// Full iterate of a message-passing detector.
#[derive(Debug, Clone, PartialEq)]
pub struct MessageState {
    users: usize,
    chips: usize,
    mhat: Vec<f64>,
    mag_cavity: Vec<f64>,
    mag_full: Vec<f64>,
    prefactor: f64,
    t: usize,
}

impl MessageState {
    /// All messages and magnetizations zero, `t = 0`.
    pub fn zeros(sys: &SpreadingSystem) -> Self {
        let (k, n) = (sys.num_users(), sys.spreading_factor());
        Self {
            users: k,
            chips: n,
            mhat: vec![0.0; n * k],
            mag_cavity: vec![0.0; n * k],
            mag_full: vec![0.0; k],
            prefactor: 0.0,
            t: 0,
        }
    }

    /// Builds a state from an `N x K` row-major message array, deriving the
    /// magnetizations from it.
    pub fn from_messages(
        users: usize,
        chips: usize,
        mhat: Vec<f64>,
        cavity: bool,
        t: usize,
    ) -> Result<Self> {
        ensure_len(users * chips, mhat.len())?;
        let mut state = Self {
            users,
            chips,
            mhat,
            mag_cavity: vec![0.0; users * chips],
            mag_full: vec![0.0; users],
            prefactor: 0.0,
            t,
        };
        state.refresh_magnetizations(cavity);
        Ok(state)
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn chips(&self) -> usize {
        self.chips
    }

    /// `N x K` row-major messages `mhat_{mu k}`.
    pub fn messages(&self) -> &[f64] {
        &self.mhat
    }

    /// `N x K` row-major cavity magnetizations `m_{mu k}`.
    pub fn cavity_magnetizations(&self) -> &[f64] {
        &self.mag_cavity
    }

    /// Full magnetizations `m_k`.
    pub fn magnetizations(&self) -> &[f64] {
        &self.mag_full
    }

    /// The prefactor used by the update that produced this state.
    pub fn prefactor(&self) -> f64 {
        self.prefactor
    }

    pub fn iteration(&self) -> usize {
        self.t
    }

    /// `Q = (1 / NK) sum_{mu k} m_{mu k}^2`.
    pub fn self_overlap(&self) -> f64 {
        self.mag_cavity.iter().map(|m| m * m).sum::<f64>() / self.mag_cavity.len() as f64
    }

    fn refresh_magnetizations(&mut self, cavity: bool) {
        let k = self.users;
        let mut field = vec![0.0; k];
        for row in self.mhat.chunks_exact(k) {
            for (h, m) in field.iter_mut().zip(row) {
                *h += m;
            }
        }
        for (m, h) in self.mag_full.iter_mut().zip(&field) {
            *m = h.tanh();
        }
        if cavity {
            for (cav, row) in self
                .mag_cavity
                .chunks_exact_mut(k)
                .zip(self.mhat.chunks_exact(k))
            {
                for ((c, h), m) in cav.iter_mut().zip(&field).zip(row) {
                    *c = (h - m).tanh();
                }
            }
        } else {
            for cav in self.mag_cavity.chunks_exact_mut(k) {
                cav.copy_from_slice(&self.mag_full);
            }
        }
    }
}

/// How the message prefactor `A` is formed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Prefactor {
    /// `A = 1 / ((1/N) sum y^2 - beta Q)`: needs no noise estimate.
    EmpiricalPower,
    /// As `EmpiricalPower` but with the received power replaced by the given
    /// value.
    ReceivedPower(f64),
    /// `A = 1 / (sigma^2 + beta (1 - Q + upsilon))`.
    AssumedNoise { sigma_sq: f64, upsilon: f64 },
}

/// Per-step switches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOptions {
    /// Use cavity magnetizations `m_{mu k} = tanh(H_k - mhat_{mu k})` (the
    /// default) rather than `m_k` for every chip.
    pub cavity: bool,
    /// New messages are `(1 - damping) * update + damping * old`.
    pub damping: f64,
}

impl Default for StepOptions {
    fn default() -> Self {
        Self {
            cavity: true,
            damping: 0.0,
        }
    }
}

impl StepOptions {
    pub fn validate(&self) -> Result<()> {
        if (0.0..1.0).contains(&self.damping) {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "damping must lie in [0, 1), got {}",
                self.damping
            )))
        }
    }
}

/// One message update with an explicit prefactor rule. Cost is `O(NK)`.
pub fn mp_step(
    state: &MessageState,
    sys: &SpreadingSystem,
    prefactor: Prefactor,
    opts: &StepOptions,
) -> Result<MessageState> {
    let (k, n) = (sys.num_users(), sys.spreading_factor());
    ensure_len(k, state.users)?;
    ensure_len(n, state.chips)?;
    opts.validate()?;
    let beta = sys.load();
    let q = state.self_overlap();
    let denominator = match prefactor {
        Prefactor::EmpiricalPower => crate::channel::empirical_signal_power(sys) - beta * q,
        Prefactor::ReceivedPower(p) => p - beta * q,
        Prefactor::AssumedNoise { sigma_sq, upsilon } => sigma_sq + beta * (1.0 - q + upsilon),
    };
    if !(denominator > 0.0) || !denominator.is_finite() {
        return Err(Error::DegenerateStatistics { denominator });
    }
    let a = 1.0 / denominator;

    let inv_sqrt_n = 1.0 / (n as f64).sqrt();
    let inv_n = 1.0 / n as f64;
    let y = sys.received();
    let mut mhat = vec![0.0; n * k];
    for mu in 0..n {
        let s = sys.chips().row(mu);
        let m = &state.mag_cavity[mu * k..(mu + 1) * k];
        let total: f64 = s.iter().zip(m).map(|(s, m)| s * m).sum();
        let out = &mut mhat[mu * k..(mu + 1) * k];
        let old = &state.mhat[mu * k..(mu + 1) * k];
        for kk in 0..k {
            let raw = y[mu] * s[kk] * inv_sqrt_n - (s[kk] * total - m[kk]) * inv_n;
            let update = a * raw;
            out[kk] = if opts.damping == 0.0 {
                update
            } else {
                (1.0 - opts.damping) * update + opts.damping * old[kk]
            };
        }
    }
    let mut next = MessageState::from_messages(k, n, mhat, opts.cavity, state.t + 1)?;
    next.prefactor = a;
    Ok(next)
}

/// The detector that needs no noise estimate: the prefactor uses the
/// received power in place of `sigma0^2 + beta`.
pub fn improved_mp_step(
    state: &MessageState,
    sys: &SpreadingSystem,
    opts: &StepOptions,
) -> Result<MessageState> {
    mp_step(state, sys, Prefactor::EmpiricalPower, opts)
}

/// The baseline that trusts an assumed noise variance `sigma_sq`.
pub fn original_mp_step(
    state: &MessageState,
    sys: &SpreadingSystem,
    sigma_sq: f64,
    opts: &StepOptions,
) -> Result<MessageState> {
    if !(sigma_sq >= 0.0) {
        return Err(Error::Config(format!(
            "assumed noise variance must be non-negative, got {sigma_sq}"
        )));
    }
    mp_step(
        state,
        sys,
        Prefactor::AssumedNoise {
            sigma_sq,
            upsilon: 0.0,
        },
        opts,
    )
}
