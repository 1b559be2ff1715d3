//! Monte-Carlo experiment runner for the `cdma-mp` detectors.
//!
//! Trials are seeded by index from a master seed, run in parallel and
//! reduced in index order, so results do not depend on the worker count.
//!
//! ```
//! use cdma_harness::{run_experiment, DetectorChoice, ExperimentSpec};
//! use cdma_mp::channel::SystemConfig;
//!
//! let spec = ExperimentSpec {
//!     system: SystemConfig::new(25, 100, 0.25).with_assumed_noise(0.01),
//!     detectors: vec![DetectorChoice::Improved],
//!     trials: 20,
//!     ..Default::default()
//! };
//! let agg = run_experiment(&spec, 1)?;
//! let improved = &agg.detectors[0];
//! assert_eq!(improved.ber_mean.len(), spec.max_iters);
//! assert!(improved.ber_mean[29] < 0.1);
//! # Ok::<(), cdma_harness::HarnessError>(())
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod emit;
pub mod error;
pub mod experiment;
pub mod spec;

pub use error::{HarnessError, Result};
pub use experiment::{
    finalize, run_experiment, run_trials, sweep, AggregateResult, DetectorSeries, PartialResult,
    SweepAxis,
};
pub use spec::{DetectorChoice, ExperimentSpec, Format, OutputSpec};
