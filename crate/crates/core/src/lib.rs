//! Condensed message passing for CDMA multiuser detection.
//!
//! The crate simulates a randomly spread BPSK channel ([`channel`]), detects
//! the transmitted bits with message-passing and reference detectors
//! ([`detectors`]), predicts the large-system behaviour of those detectors
//! ([`density_evolution`]) and analyses the two-peak landscape behind the
//! improved detector ([`saddle`]).
//!
//! ```
//! use cdma_mp::channel::{sample_system, SystemConfig};
//! use cdma_mp::detectors::{run_detector, DetectorKind, RunOptions};
//! use cdma_mp::rng::RngSeed;
//!
//! let cfg = SystemConfig::from_load(0.25, 400, 0.25)?;
//! let sys = sample_system(cfg, RngSeed::new(42, 0))?;
//! let out = run_detector(&sys, DetectorKind::Improved, &RunOptions::new(30, 1e-8))?;
//! assert!(out.converged);
//! assert!(out.ber_trace.unwrap().last().unwrap() < &0.1);
//! # Ok::<(), cdma_mp::Error>(())
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod density_evolution;
pub mod detectors;
pub mod error;
pub mod quadrature;
pub mod rng;
pub mod roots;
pub mod saddle;
pub mod stats;

pub use error::{Error, Result};
