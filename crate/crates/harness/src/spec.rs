//! Serializable experiment descriptions.

use std::path::PathBuf;

use cdma_mp::channel::SystemConfig;
use cdma_mp::detectors::{DetectorKind, RunOptions, StepOptions, MAX_EXACT_USERS};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorChoice {
    Improved,
    Original,
    Matched,
    Exact,
}

impl DetectorChoice {
    pub fn name(&self) -> &'static str {
        match self {
            DetectorChoice::Improved => "improved",
            DetectorChoice::Original => "original",
            DetectorChoice::Matched => "matched",
            DetectorChoice::Exact => "exact",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "improved" => Ok(Self::Improved),
            "original" => Ok(Self::Original),
            "matched" => Ok(Self::Matched),
            "exact" => Ok(Self::Exact),
            other => Err(HarnessError::Config(format!("unknown detector {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// Base path; each format appends its extension.
    pub path: PathBuf,
    pub formats: Vec<Format>,
}

/// A fully seeded Monte-Carlo run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub system: SystemConfig,
    pub detectors: Vec<DetectorChoice>,
    pub max_iters: usize,
    pub conv_threshold: f64,
    pub trials: u64,
    pub master_seed: u64,
    #[serde(default = "default_cavity")]
    pub cavity: bool,
    #[serde(default)]
    pub damping: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSpec>,
}

fn default_cavity() -> bool {
    true
}

impl Default for ExperimentSpec {
    /// Desk-scale mismatched-noise setup: `N = 1000`, `beta = 0.25`,
    /// `sigma0^2 = 0.25`, assumed `sigma^2 = 0.01`, 1000 trials.
    fn default() -> Self {
        Self {
            system: SystemConfig::new(250, 1000, 0.25).with_assumed_noise(0.01),
            detectors: vec![DetectorChoice::Improved, DetectorChoice::Original],
            max_iters: 30,
            conv_threshold: 1e-8,
            trials: 1000,
            master_seed: 1,
            cavity: true,
            damping: 0.0,
            output: None,
        }
    }
}

impl ExperimentSpec {
    pub fn from_json(s: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(s)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        if self.trials == 0 {
            return Err(HarnessError::Config("trials must be at least 1".into()));
        }
        if self.detectors.is_empty() {
            return Err(HarnessError::Config(
                "at least one detector is required".into(),
            ));
        }
        self.run_options().validate()?;
        for d in &self.detectors {
            self.detector_kind(*d)?;
        }
        Ok(())
    }

    /// Noise variance handed to detectors that need one. Falls back to the
    /// true variance when no estimate is configured.
    pub fn posterior_noise(&self) -> f64 {
        self.system
            .assumed_noise_variance
            .unwrap_or(self.system.true_noise_variance)
    }

    pub fn detector_kind(&self, choice: DetectorChoice) -> Result<DetectorKind> {
        Ok(match choice {
            DetectorChoice::Improved => DetectorKind::Improved,
            DetectorChoice::Matched => DetectorKind::Matched,
            DetectorChoice::Original => DetectorKind::Original {
                sigma_sq: self.system.assumed_noise_variance.ok_or_else(|| {
                    HarnessError::Config(
                        "the original detector needs an assumed noise variance (--sigma-sq)".into(),
                    )
                })?,
            },
            DetectorChoice::Exact => {
                if self.system.num_users > MAX_EXACT_USERS {
                    return Err(HarnessError::Config(format!(
                        "exact detection supports at most {MAX_EXACT_USERS} users, got {}",
                        self.system.num_users
                    )));
                }
                let sigma_sq = self.posterior_noise();
                if !(sigma_sq > 0.0) {
                    return Err(HarnessError::Config(
                        "exact detection needs a positive noise variance".into(),
                    ));
                }
                DetectorKind::Exact { sigma_sq }
            }
        })
    }

    pub fn run_options(&self) -> RunOptions {
        RunOptions {
            max_iters: self.max_iters,
            conv_threshold: self.conv_threshold,
            step: StepOptions {
                cavity: self.cavity,
                damping: self.damping,
            },
            track_ber: true,
        }
    }

    /// Canonical JSON of everything that affects results (output locations
    /// excluded).
    pub fn canonical_json(&self) -> String {
        let mut clone = self.clone();
        clone.output = None;
        serde_json::to_string(&clone).expect("spec serializes")
    }

    /// Hex SHA-256 of [`canonical_json`](Self::canonical_json).
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_json().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
