//! Trial execution and aggregation.

use std::collections::BTreeMap;
use std::ops::Range;
use std::time::Instant;

use cdma_mp::channel::sample_system;
use cdma_mp::density_evolution::{DEConfig, DensityEvolution, UpsilonMode};
use cdma_mp::detectors::run_detector;
use cdma_mp::rng::RngSeed;
use cdma_mp::stats::RunningStats;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::spec::{DetectorChoice, ExperimentSpec};

/// Per-trial traces of one detector. Single-shot detectors have length-one
/// traces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorTrace {
    pub ber: Vec<f64>,
    pub d: Vec<f64>,
    pub converged: bool,
}

impl DetectorTrace {
    /// Value at 1-based iteration `t`, repeating the last entry past the end.
    fn at(values: &[f64], t: usize) -> f64 {
        values[(t - 1).min(values.len() - 1)]
    }

    pub fn iterations_run(&self) -> usize {
        self.d.len()
    }

    /// Whether the trace ever dropped below `threshold`.
    pub fn reached(&self, threshold: f64) -> bool {
        self.d.iter().any(|&d| d < threshold)
    }
}

/// One trial: a result or an error message per requested detector, in the
/// spec's detector order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub outcomes: Vec<std::result::Result<DetectorTrace, String>>,
}

/// Records for a subset of trial indices. Merging is a keyed union, so the
/// order partials arrive in does not matter.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialResult {
    spec_hash: String,
    records: BTreeMap<u64, TrialRecord>,
}

impl PartialResult {
    pub fn records(&self) -> &BTreeMap<u64, TrialRecord> {
        &self.records
    }

    pub fn merge(mut self, other: PartialResult) -> Result<PartialResult> {
        if self.spec_hash != other.spec_hash {
            return Err(HarnessError::Config(
                "cannot merge results of different specs".into(),
            ));
        }
        for (trial, rec) in other.records {
            if self.records.insert(trial, rec).is_some() {
                return Err(HarnessError::Config(format!(
                    "trial {trial} present in both partial results"
                )));
            }
        }
        Ok(self)
    }
}

/// Runs one trial of every requested detector.
pub fn run_trial(spec: &ExperimentSpec, trial: u64) -> Result<TrialRecord> {
    let sys = sample_system(spec.system, RngSeed::new(spec.master_seed, trial))?;
    let opts = spec.run_options();
    let outcomes = spec
        .detectors
        .iter()
        .map(|&choice| {
            let kind = spec.detector_kind(choice)?;
            Ok(match run_detector(&sys, kind, &opts) {
                Ok(out) => Ok(DetectorTrace {
                    ber: out.ber_trace.unwrap_or_default(),
                    d: out.d_trace,
                    converged: out.converged,
                }),
                Err(e) => Err(e.to_string()),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TrialRecord { outcomes })
}

/// Runs the trials in `range` on the current rayon pool.
pub fn run_trials(spec: &ExperimentSpec, range: Range<u64>) -> Result<PartialResult> {
    spec.validate()?;
    if range.end > spec.trials {
        return Err(HarnessError::Config(format!(
            "trial range {range:?} exceeds the {} configured trials",
            spec.trials
        )));
    }
    let records = range
        .into_par_iter()
        .map(|t| run_trial(spec, t).map(|r| (t, r)))
        .collect::<Result<Vec<_>>>()?;
    Ok(PartialResult {
        spec_hash: spec.hash(),
        records: records.into_iter().collect(),
    })
}

/// Per-iteration aggregates of one detector. All arrays have length
/// `max_iters`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorSeries {
    pub detector: DetectorChoice,
    pub ber_mean: Vec<f64>,
    pub ber_stderr: Vec<f64>,
    pub d_mean: Vec<f64>,
    /// Trials still iterating at each iteration.
    pub active_trials: Vec<u64>,
    /// Density-evolution prediction, if one applies to this detector.
    pub de_ber: Option<Vec<f64>>,
    pub completed_trials: u64,
    pub failed_trials: u64,
    pub converged_trials: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub wall_seconds: f64,
    pub workers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateResult {
    pub spec: ExperimentSpec,
    pub spec_hash: String,
    pub master_seed: u64,
    pub trials: u64,
    pub iterations: usize,
    pub detectors: Vec<DetectorSeries>,
    /// Kept out of the manifest so outputs stay byte-identical.
    #[serde(skip)]
    pub timing: Option<Timing>,
}

impl AggregateResult {
    pub fn series(&self, detector: DetectorChoice) -> Option<&DetectorSeries> {
        self.detectors.iter().find(|s| s.detector == detector)
    }
}

/// Largest tolerated share of failed trials per detector.
pub const MAX_FAILURE_FRACTION: f64 = 1e-3;

/// Density-evolution BER per iteration `1..=iters` for a detector, or `None`
/// when no prediction applies.
pub fn de_prediction(spec: &ExperimentSpec, detector: DetectorChoice) -> Result<Option<Vec<f64>>> {
    let beta = spec.system.load();
    let sigma0_sq = spec.system.true_noise_variance;
    let (sigma_sq, mode, steps) = match detector {
        DetectorChoice::Improved => (spec.posterior_noise(), UpsilonMode::Optimal, spec.max_iters),
        DetectorChoice::Original => (spec.posterior_noise(), UpsilonMode::Zero, spec.max_iters),
        // A matched filter is one optimal-mode step from the zero state.
        DetectorChoice::Matched => (sigma0_sq, UpsilonMode::Optimal, 1),
        DetectorChoice::Exact => return Ok(None),
    };
    let de = DensityEvolution::new(DEConfig::new(beta, sigma0_sq, sigma_sq, mode))?;
    let traj = de.trajectory(steps)?;
    let mut ber: Vec<f64> = traj[1..].iter().map(|s| s.predicted_ber()).collect();
    let last = *ber.last().expect("at least one step");
    ber.resize(spec.max_iters, last);
    Ok(Some(ber))
}

/// Reduces per-trial records to per-iteration statistics, visiting trials
/// in index order.
pub fn finalize(spec: &ExperimentSpec, partial: &PartialResult) -> Result<AggregateResult> {
    if partial.spec_hash != spec.hash() {
        return Err(HarnessError::Config(
            "partial result belongs to another spec".into(),
        ));
    }
    let expected: Vec<u64> = (0..spec.trials).collect();
    if !partial.records.keys().copied().eq(expected.iter().copied()) {
        return Err(HarnessError::Config(format!(
            "expected records for trials 0..{}, got {}",
            spec.trials,
            partial.records.len()
        )));
    }
    let iters = spec.max_iters;
    let mut detectors = Vec::with_capacity(spec.detectors.len());
    for (slot, &choice) in spec.detectors.iter().enumerate() {
        let mut ber = vec![RunningStats::new(); iters];
        let mut d = vec![RunningStats::new(); iters];
        let mut active = vec![0u64; iters];
        let (mut failed, mut converged) = (0u64, 0u64);
        for rec in partial.records.values() {
            let trace = match &rec.outcomes[slot] {
                Ok(t) => t,
                Err(_) => {
                    failed += 1;
                    continue;
                }
            };
            converged += u64::from(trace.converged);
            for t in 1..=iters {
                ber[t - 1].push(DetectorTrace::at(&trace.ber, t));
                d[t - 1].push(DetectorTrace::at(&trace.d, t));
                if trace.iterations_run() >= t {
                    active[t - 1] += 1;
                }
            }
        }
        if failed as f64 > MAX_FAILURE_FRACTION * spec.trials as f64 {
            let first = partial
                .records
                .values()
                .find_map(|r| r.outcomes[slot].as_ref().err())
                .cloned()
                .unwrap_or_default();
            return Err(HarnessError::Numerical(format!(
                "{} failed in {failed} of {} trials (first error: {first})",
                choice.name(),
                spec.trials
            )));
        }
        let completed = spec.trials - failed;
        if completed == 0 {
            return Err(HarnessError::Numerical(format!(
                "{} produced no trials",
                choice.name()
            )));
        }
        detectors.push(DetectorSeries {
            detector: choice,
            ber_mean: ber.iter().map(RunningStats::mean).collect(),
            ber_stderr: ber.iter().map(stderr_or_zero).collect(),
            d_mean: d.iter().map(RunningStats::mean).collect(),
            active_trials: active,
            de_ber: de_prediction(spec, choice)?,
            completed_trials: completed,
            failed_trials: failed,
            converged_trials: converged,
        });
    }
    Ok(AggregateResult {
        spec: spec.clone(),
        spec_hash: spec.hash(),
        master_seed: spec.master_seed,
        trials: spec.trials,
        iterations: iters,
        detectors,
        timing: None,
    })
}

fn stderr_or_zero(s: &RunningStats) -> f64 {
    if s.count() < 2 {
        0.0
    } else {
        s.std_error()
    }
}

/// Builds a rayon pool with `workers` threads (0 = rayon's default).
pub fn thread_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| HarnessError::Config(format!("cannot build thread pool: {e}")))
}

/// Runs every trial of `spec` and aggregates.
pub fn run_experiment(spec: &ExperimentSpec, workers: usize) -> Result<AggregateResult> {
    let (agg, _) = run_experiment_with_records(spec, workers)?;
    Ok(agg)
}

/// [`run_experiment`] that also hands back the per-trial records.
pub fn run_experiment_with_records(
    spec: &ExperimentSpec,
    workers: usize,
) -> Result<(AggregateResult, PartialResult)> {
    spec.validate()?;
    let pool = thread_pool(workers)?;
    let start = Instant::now();
    let partial = pool.install(|| run_trials(spec, 0..spec.trials))?;
    let mut agg = finalize(spec, &partial)?;
    agg.timing = Some(Timing {
        wall_seconds: start.elapsed().as_secs_f64(),
        workers: pool.current_num_threads(),
    });
    Ok((agg, partial))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Beta,
    Sigma0Sq,
    SigmaSq,
    N,
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::Beta => "beta",
            SweepAxis::Sigma0Sq => "sigma0_sq",
            SweepAxis::SigmaSq => "sigma_sq",
            SweepAxis::N => "N",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "beta" => Ok(Self::Beta),
            "sigma0_sq" | "sigma0-sq" => Ok(Self::Sigma0Sq),
            "sigma_sq" | "sigma-sq" => Ok(Self::SigmaSq),
            "N" | "n" => Ok(Self::N),
            other => Err(HarnessError::Config(format!(
                "unknown sweep axis {other:?}"
            ))),
        }
    }

    /// `base` with this axis set to `value`. Changing `N` keeps the load.
    pub fn apply(&self, base: &ExperimentSpec, value: f64) -> Result<ExperimentSpec> {
        let mut spec = base.clone();
        let sys = &mut spec.system;
        match self {
            SweepAxis::Beta => {
                sys.num_users = round_count(value * sys.spreading_factor as f64, "K")?;
            }
            SweepAxis::Sigma0Sq => sys.true_noise_variance = value,
            SweepAxis::SigmaSq => sys.assumed_noise_variance = Some(value),
            SweepAxis::N => {
                let beta = sys.load();
                let n = round_count(value, "N")?;
                if (value - n as f64).abs() > 1e-9 {
                    return Err(HarnessError::Config(format!(
                        "N must be an integer, got {value}"
                    )));
                }
                sys.spreading_factor = n;
                sys.num_users = round_count(beta * n as f64, "K")?;
            }
        }
        spec.validate()?;
        Ok(spec)
    }
}

fn round_count(x: f64, what: &str) -> Result<usize> {
    if !(x.is_finite() && x >= 0.5) {
        return Err(HarnessError::Config(format!(
            "{what} = {x} does not round to a positive count"
        )));
    }
    Ok(x.round() as usize)
}

/// One [`run_experiment`] per axis value. Every point reuses the base seed,
/// so points differ only through the swept parameter.
pub fn sweep(
    base: &ExperimentSpec,
    axis: SweepAxis,
    values: &[f64],
    workers: usize,
) -> Result<Vec<(f64, AggregateResult)>> {
    if values.is_empty() {
        return Err(HarnessError::Config(
            "sweep needs at least one value".into(),
        ));
    }
    values
        .iter()
        .map(|&v| Ok((v, run_experiment(&axis.apply(base, v)?, workers)?)))
        .collect()
}
