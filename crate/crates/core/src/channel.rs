//! Synthetic CDMA transmissions.
//!
//! `K` users send one BPSK symbol each, spread over `N` chips by random
//! binary codes, and the receiver sees
//!
//! ```text
//! y_mu = (1/sqrt N) * sum_k s_{mu k} b_k + sigma0 * n_mu
//! ```
//!
//! with unit-power users and white Gaussian noise `n_mu ~ N(0, 1)`.

use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_len, Error, Result};
use crate::rng::{RngSeed, StreamTag};

/// Channel and system dimensions for one experiment point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    /// Number of users `K`.
    pub num_users: usize,
    /// Spreading factor `N`, the number of chips per symbol.
    pub spreading_factor: usize,
    /// True channel noise variance `sigma0^2`.
    pub true_noise_variance: f64,
    /// Noise variance assumed by detectors that need one. `None` means the
    /// receiver has no estimate.
    #[serde(default)]
    pub assumed_noise_variance: Option<f64>,
}

impl SystemConfig {
    pub fn new(num_users: usize, spreading_factor: usize, true_noise_variance: f64) -> Self {
        Self {
            num_users,
            spreading_factor,
            true_noise_variance,
            assumed_noise_variance: None,
        }
    }

    /// Builds a config at load `beta`, rounding `K = beta * N` to the nearest
    /// integer.
    pub fn from_load(beta: f64, spreading_factor: usize, true_noise_variance: f64) -> Result<Self> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::Config(format!("load must be positive, got {beta}")));
        }
        let k = (beta * spreading_factor as f64).round() as usize;
        let cfg = Self::new(k, spreading_factor, true_noise_variance);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_assumed_noise(mut self, sigma_sq: f64) -> Self {
        self.assumed_noise_variance = Some(sigma_sq);
        self
    }

    /// System load `beta = K / N`.
    pub fn load(&self) -> f64 {
        self.num_users as f64 / self.spreading_factor as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_users == 0 {
            return Err(Error::Config("number of users must be at least 1".into()));
        }
        if self.spreading_factor == 0 {
            return Err(Error::Config("spreading factor must be at least 1".into()));
        }
        if !(self.true_noise_variance.is_finite() && self.true_noise_variance >= 0.0) {
            return Err(Error::Config(format!(
                "true noise variance must be finite and non-negative, got {}",
                self.true_noise_variance
            )));
        }
        if let Some(s) = self.assumed_noise_variance {
            if !(s.is_finite() && s >= 0.0) {
                return Err(Error::Config(format!(
                    "assumed noise variance must be finite and non-negative, got {s}"
                )));
            }
        }
        Ok(())
    }
}

/// A matrix of `+1`/`-1` entries packed one bit per entry, with a dense
/// `f64` copy kept alongside for arithmetic.
///
/// Bit set means `-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SignMatrix {
    rows: usize,
    cols: usize,
    words_per_row: usize,
    words: Vec<u64>,
    dense: Vec<f64>,
}

impl SignMatrix {
    fn from_words(rows: usize, cols: usize, mut words: Vec<u64>) -> Self {
        let words_per_row = cols.div_ceil(64);
        debug_assert_eq!(words.len(), rows * words_per_row);
        let tail = cols % 64;
        if tail != 0 {
            let mask = (1u64 << tail) - 1;
            for r in 0..rows {
                words[r * words_per_row + words_per_row - 1] &= mask;
            }
        }
        let mut dense = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            let row = &words[r * words_per_row..(r + 1) * words_per_row];
            for c in 0..cols {
                let neg = (row[c / 64] >> (c % 64)) & 1 == 1;
                dense.push(if neg { -1.0 } else { 1.0 });
            }
        }
        Self {
            rows,
            cols,
            words_per_row,
            words,
            dense,
        }
    }

    /// Draws i.i.d. uniform signs.
    pub fn random<R: RngCore>(rows: usize, cols: usize, rng: &mut R) -> Self {
        let words_per_row = cols.div_ceil(64);
        let words = (0..rows * words_per_row).map(|_| rng.next_u64()).collect();
        Self::from_words(rows, cols, words)
    }

    pub fn from_signs(rows: usize, cols: usize, signs: &[i8]) -> Result<Self> {
        ensure_len(rows * cols, signs.len())?;
        let words_per_row = cols.div_ceil(64);
        let mut words = vec![0u64; rows * words_per_row];
        for (i, &s) in signs.iter().enumerate() {
            let (r, c) = (i / cols, i % cols);
            match s {
                1 => {}
                -1 => words[r * words_per_row + c / 64] |= 1 << (c % 64),
                v => {
                    return Err(Error::NotAntipodal {
                        index: i,
                        value: v as i64,
                    })
                }
            }
        }
        Ok(Self::from_words(rows, cols, words))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> i8 {
        if (self.words[r * self.words_per_row + c / 64] >> (c % 64)) & 1 == 1 {
            -1
        } else {
            1
        }
    }

    /// Row-major dense view.
    pub fn dense(&self) -> &[f64] {
        &self.dense
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.dense[r * self.cols..(r + 1) * self.cols]
    }

    /// Row-major signs.
    pub fn signs(&self) -> Vec<i8> {
        let mut out = Vec::with_capacity(self.rows * self.cols);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.push(self.get(r, c));
            }
        }
        out
    }

    /// Exact integer product `S b` for a sign vector `b`.
    pub fn mul_signs(&self, b: &[i8]) -> Vec<i64> {
        (0..self.rows)
            .map(|r| {
                (0..self.cols)
                    .map(|c| i64::from(self.get(r, c)) * i64::from(b[c]))
                    .sum()
            })
            .collect()
    }
}

/// One simulated transmission: codes, bits, noise and the received chips.
///
/// Immutable after construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "SystemRecord", try_from = "SystemRecord")]
pub struct SpreadingSystem {
    config: SystemConfig,
    chips: SignMatrix,
    bits: Vec<i8>,
    noise: Vec<f64>,
    received: Vec<f64>,
}

impl SpreadingSystem {
    /// Assembles a system and computes the received vector from the channel
    /// equation. `chips` is `N x K`.
    pub fn from_parts(
        config: SystemConfig,
        chips: SignMatrix,
        bits: Vec<i8>,
        noise: Vec<f64>,
    ) -> Result<Self> {
        config.validate()?;
        let (k, n) = (config.num_users, config.spreading_factor);
        ensure_len(n, chips.rows())?;
        ensure_len(k, chips.cols())?;
        ensure_len(k, bits.len())?;
        ensure_len(n, noise.len())?;
        check_antipodal(&bits)?;
        let received = transmit(&chips, &bits, &noise, config.true_noise_variance);
        Ok(Self {
            config,
            chips,
            bits,
            noise,
            received,
        })
    }

    pub fn config(&self) -> &SystemConfig {
        &self.config
    }

    pub fn num_users(&self) -> usize {
        self.config.num_users
    }

    pub fn spreading_factor(&self) -> usize {
        self.config.spreading_factor
    }

    pub fn load(&self) -> f64 {
        self.config.load()
    }

    /// `N x K` spreading codes.
    pub fn chips(&self) -> &SignMatrix {
        &self.chips
    }

    pub fn bits(&self) -> &[i8] {
        &self.bits
    }

    pub fn noise(&self) -> &[f64] {
        &self.noise
    }

    pub fn received(&self) -> &[f64] {
        &self.received
    }

    /// Same codes and noise realization, different transmitted bits.
    pub fn retransmit(&self, bits: Vec<i8>) -> Result<Self> {
        Self::from_parts(self.config, self.chips.clone(), bits, self.noise.clone())
    }

    /// The antipodal image: bits and noise negated, so the received vector is
    /// exactly `-y`.
    pub fn mirrored(&self) -> Result<Self> {
        let bits = self.bits.iter().map(|b| -b).collect();
        let noise = self.noise.iter().map(|n| -n).collect();
        Self::from_parts(self.config, self.chips.clone(), bits, noise)
    }

    /// Same codes, bits and noise, different true noise variance.
    pub fn with_noise_variance(&self, true_noise_variance: f64) -> Result<Self> {
        let mut config = self.config;
        config.true_noise_variance = true_noise_variance;
        Self::from_parts(
            config,
            self.chips.clone(),
            self.bits.clone(),
            self.noise.clone(),
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("system serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }
}

/// Applies the channel equation. Noise is skipped when `sigma0_sq == 0`.
pub fn transmit(chips: &SignMatrix, bits: &[i8], noise: &[f64], sigma0_sq: f64) -> Vec<f64> {
    let scale = 1.0 / (chips.rows() as f64).sqrt();
    let sigma0 = sigma0_sq.sqrt();
    chips
        .mul_signs(bits)
        .into_iter()
        .zip(noise)
        .map(|(c, &n)| {
            let clean = c as f64 * scale;
            if sigma0_sq == 0.0 {
                clean
            } else {
                clean + sigma0 * n
            }
        })
        .collect()
}

fn check_antipodal(v: &[i8]) -> Result<()> {
    match v.iter().position(|&b| b != 1 && b != -1) {
        Some(i) => Err(Error::NotAntipodal {
            index: i,
            value: v[i] as i64,
        }),
        None => Ok(()),
    }
}

fn random_signs<R: RngCore>(len: usize, rng: &mut R) -> Vec<i8> {
    let mut out = Vec::with_capacity(len);
    while out.len() < len {
        let w = rng.next_u64();
        for i in 0..64.min(len - out.len()) {
            out.push(if (w >> i) & 1 == 1 { -1 } else { 1 });
        }
    }
    out
}

/// Draws codes, bits and noise for one trial.
///
/// Codes, bits and noise come from separate streams, so changing the noise
/// level leaves the codes and bits untouched.
pub fn sample_system(config: SystemConfig, seed: RngSeed) -> Result<SpreadingSystem> {
    config.validate()?;
    let (k, n) = (config.num_users, config.spreading_factor);
    let chips = SignMatrix::random(n, k, &mut seed.stream(StreamTag::Chips));
    let bits = random_signs(k, &mut seed.stream(StreamTag::Bits));
    let noise = if config.true_noise_variance == 0.0 {
        vec![0.0; n]
    } else {
        let mut rng = seed.stream(StreamTag::Noise);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    };
    SpreadingSystem::from_parts(config, chips, bits, noise)
}

/// Mean received power `(1/N) sum_mu y_mu^2`.
pub fn empirical_signal_power(sys: &SpreadingSystem) -> f64 {
    let y = sys.received();
    y.iter().map(|v| v * v).sum::<f64>() / y.len() as f64
}

/// Flat serialized layout: config, row-major code signs, bits, noise and
/// received values at full precision.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemRecord {
    config: SystemConfig,
    chips: Vec<i8>,
    bits: Vec<i8>,
    noise: Vec<f64>,
    received: Vec<f64>,
}

impl From<SpreadingSystem> for SystemRecord {
    fn from(s: SpreadingSystem) -> Self {
        Self {
            config: s.config,
            chips: s.chips.signs(),
            bits: s.bits,
            noise: s.noise,
            received: s.received,
        }
    }
}

impl TryFrom<SystemRecord> for SpreadingSystem {
    type Error = Error;

    fn try_from(r: SystemRecord) -> Result<Self> {
        r.config.validate()?;
        let chips =
            SignMatrix::from_signs(r.config.spreading_factor, r.config.num_users, &r.chips)?;
        let sys = SpreadingSystem::from_parts(r.config, chips, r.bits, r.noise)?;
        if sys.received != r.received {
            return Err(Error::Config(
                "received vector does not match the channel equation".into(),
            ));
        }
        Ok(sys)
    }
}
