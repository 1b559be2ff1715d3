//! CSV and JSON writers. Numbers are written with 17 significant digits.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{HarnessError, Result};
use crate::experiment::AggregateResult;

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// `iteration,detector,ber_mean,ber_stderr,d_mean,active_trials`
pub fn simulate_csv(agg: &AggregateResult) -> String {
    let mut out = String::from("iteration,detector,ber_mean,ber_stderr,d_mean,active_trials\n");
    for s in &agg.detectors {
        for t in 0..agg.iterations {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                t + 1,
                s.detector.name(),
                num(s.ber_mean[t]),
                num(s.ber_stderr[t]),
                num(s.d_mean[t]),
                s.active_trials[t]
            )
            .unwrap();
        }
    }
    out
}

fn compare_rows(agg: &AggregateResult, prefix: &str, out: &mut String) {
    for s in &agg.detectors {
        for t in 0..agg.iterations {
            writeln!(
                out,
                "{prefix}{},{},{},{},{},{}",
                t + 1,
                s.detector.name(),
                num(s.ber_mean[t]),
                num(s.ber_stderr[t]),
                num(s.d_mean[t]),
                opt_num(s.de_ber.as_ref().map(|d| d[t]))
            )
            .unwrap();
        }
    }
}

/// `iteration,detector,ber_mean,ber_stderr,d_mean,de_ber`; `de_ber` is
/// empty for detectors without a prediction.
pub fn compare_csv(agg: &AggregateResult) -> String {
    let mut out = String::from("iteration,detector,ber_mean,ber_stderr,d_mean,de_ber\n");
    compare_rows(agg, "", &mut out);
    out
}

/// Compare rows prefixed with `axis,value`.
pub fn sweep_csv(axis: &str, points: &[(f64, AggregateResult)]) -> String {
    let mut out = String::from("axis,value,iteration,detector,ber_mean,ber_stderr,d_mean,de_ber\n");
    for (value, agg) in points {
        compare_rows(agg, &format!("{axis},{},", num(*value)), &mut out);
    }
    out
}

/// Pretty JSON manifest: spec echo, hash, seed and per-iteration arrays.
pub fn manifest_json(agg: &AggregateResult) -> String {
    let mut s = serde_json::to_string_pretty(agg).expect("aggregate serializes");
    s.push('\n');
    s
}

pub fn read_manifest(path: &Path) -> Result<AggregateResult> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text)
        .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))
}

/// `base` with `ext` appended (`out/mismatch` becomes `out/mismatch.csv`).
pub fn with_extension(base: &Path, ext: &str) -> PathBuf {
    let mut s = base.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

/// Writes `contents`, creating parent directories.
pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, contents)?;
    Ok(())
}

/// Wall-clock sidecar written next to the manifest.
pub fn timing_json(agg: &AggregateResult) -> Option<String> {
    agg.timing.map(|t| {
        serde_json::json!({
            "spec_hash": agg.spec_hash,
            "wall_seconds": t.wall_seconds,
            "workers": t.workers,
            "seconds_per_trial": t.wall_seconds / agg.trials as f64,
        })
        .to_string()
            + "\n"
    })
}
