//! Command-line front end.

use std::fs;
use std::io::Write as _;
use std::path::PathBuf;

use cdma_mp::density_evolution::{trajectory_csv, DEConfig, DensityEvolution, UpsilonMode};
use cdma_mp::saddle::{regime_scan, scan_csv};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::emit;
use crate::error::{HarnessError, Result};
use crate::experiment::{run_experiment, sweep, AggregateResult, SweepAxis};
use crate::spec::{DetectorChoice, ExperimentSpec, Format, OutputSpec};

#[derive(Debug, Parser)]
#[command(
    name = "cdma-mp",
    version,
    about = "Message-passing CDMA detection experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte-Carlo BER and convergence per iteration.
    Simulate(SimArgs),
    /// Density-evolution trajectory.
    De(DeArgs),
    /// Repeat `compare` over one parameter axis.
    Sweep(SweepArgs),
    /// Classify the single-variable landscape over a (g, h) grid.
    SaddleScan(ScanArgs),
    /// Simulation with the density-evolution prediction alongside.
    Compare(SimArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct SystemArgs {
    /// Load K/N; sets K = round(beta N).
    #[arg(long)]
    pub beta: Option<f64>,
    /// True channel noise variance.
    #[arg(long)]
    pub sigma0_sq: Option<f64>,
    /// Noise variance assumed by the receiver.
    #[arg(long)]
    pub sigma_sq: Option<f64>,
    /// Number of users K.
    #[arg(long)]
    pub users: Option<usize>,
    /// Spreading factor N.
    #[arg(long)]
    pub spreading: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct OutputArgs {
    /// Output base path; extensions are appended per format. Omit for stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Comma-separated formats.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub format: Vec<Format>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SimArgs {
    /// JSON experiment file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub system: SystemArgs,
    #[arg(long)]
    pub trials: Option<u64>,
    /// Maximum iterations per trial.
    #[arg(long)]
    pub iters: Option<usize>,
    /// Stop once the mean squared magnetization change drops below this.
    #[arg(long)]
    pub conv_eps: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated detector list.
    #[arg(long, value_delimiter = ',')]
    pub detector: Vec<String>,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub sim: SimArgs,
    /// One of beta, sigma0_sq, sigma_sq, N.
    #[arg(long)]
    pub axis: String,
    #[arg(long, value_delimiter = ',', required = true)]
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Optimal,
    Zero,
    Fixed,
}

#[derive(Debug, Clone, Args)]
pub struct DeArgs {
    #[arg(long, default_value_t = 0.25)]
    pub beta: f64,
    #[arg(long, default_value_t = 0.25)]
    pub sigma0_sq: f64,
    #[arg(long, default_value_t = 0.01)]
    pub sigma_sq: f64,
    #[arg(long, default_value_t = 30)]
    pub iters: usize,
    #[arg(long, value_enum, default_value_t = ModeArg::Optimal)]
    pub mode: ModeArg,
    /// Constant cross-replica term for `--mode fixed`.
    #[arg(long, allow_hyphen_values = true)]
    pub upsilon: Option<f64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ScanArgs {
    #[arg(long, default_value_t = 0.5)]
    pub g_min: f64,
    #[arg(long, default_value_t = 2.0)]
    pub g_max: f64,
    #[arg(long, default_value_t = 31)]
    pub g_points: usize,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub h_min: f64,
    #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
    pub h_max: f64,
    #[arg(long, default_value_t = 11)]
    pub h_points: usize,
    /// Replica count n used for the peak weights.
    #[arg(long, default_value_t = 1.0)]
    pub replicas: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(a) => simulate(&a, false),
        Command::Compare(a) => simulate(&a, true),
        Command::Sweep(a) => run_sweep(&a),
        Command::De(a) => run_de(&a),
        Command::SaddleScan(a) => run_scan(&a),
    }
}

/// Builds the experiment from `--config` (or the defaults) and the flags.
pub fn build_spec(a: &SimArgs) -> Result<ExperimentSpec> {
    let mut spec = match &a.config {
        Some(path) => ExperimentSpec::from_json(&fs::read_to_string(path)?)?,
        None => ExperimentSpec::default(),
    };
    let sys = &mut spec.system;
    let old_load = sys.load();
    if let Some(n) = a.system.spreading {
        sys.spreading_factor = n;
    }
    let n = sys.spreading_factor as f64;
    match (a.system.users, a.system.beta) {
        (Some(k), Some(beta)) => {
            if (k as f64 / n - beta).abs() > 1e-12 {
                return Err(HarnessError::Config(format!(
                    "--users {k} and --beta {beta} disagree for N = {n}"
                )));
            }
            sys.num_users = k;
        }
        (Some(k), None) => sys.num_users = k,
        (None, Some(beta)) => sys.num_users = (beta * n).round() as usize,
        (None, None) if a.system.spreading.is_some() => {
            sys.num_users = (old_load * n).round() as usize
        }
        (None, None) => {}
    }
    if let Some(v) = a.system.sigma0_sq {
        sys.true_noise_variance = v;
    }
    if let Some(v) = a.system.sigma_sq {
        sys.assumed_noise_variance = Some(v);
    }
    if let Some(v) = a.trials {
        spec.trials = v;
    }
    if let Some(v) = a.iters {
        spec.max_iters = v;
    }
    if let Some(v) = a.conv_eps {
        spec.conv_threshold = v;
    }
    if let Some(v) = a.seed {
        spec.master_seed = v;
    }
    if !a.detector.is_empty() {
        spec.detectors = a
            .detector
            .iter()
            .map(|d| DetectorChoice::parse(d))
            .collect::<Result<_>>()?;
    }
    if let Some(path) = &a.output.out {
        spec.output = Some(OutputSpec {
            path: path.clone(),
            formats: formats_or_default(&a.output.format),
        });
    } else if let Some(o) = &mut spec.output {
        if !a.output.format.is_empty() {
            o.formats = a.output.format.clone();
        }
    }
    spec.validate()?;
    Ok(spec)
}

fn formats_or_default(f: &[Format]) -> Vec<Format> {
    if f.is_empty() {
        vec![Format::Csv, Format::Json]
    } else {
        f.to_vec()
    }
}

/// Writes each format to `<base>.<ext>`, or the first format to stdout.
fn deliver(
    out: Option<&OutputSpec>,
    formats: &[Format],
    render: impl Fn(Format) -> String,
) -> Result<()> {
    match out {
        Some(o) => {
            for &f in &o.formats {
                let ext = match f {
                    Format::Csv => "csv",
                    Format::Json => "json",
                };
                emit::write_file(&emit::with_extension(&o.path, ext), &render(f))?;
            }
        }
        None => {
            let f = formats.first().copied().unwrap_or(Format::Csv);
            std::io::stdout().lock().write_all(render(f).as_bytes())?;
        }
    }
    Ok(())
}

fn output_spec(o: &OutputArgs) -> Option<OutputSpec> {
    o.out.as_ref().map(|p| OutputSpec {
        path: p.clone(),
        formats: formats_or_default(&o.format),
    })
}

fn report_timing(agg: &AggregateResult, out: Option<&OutputSpec>) -> Result<()> {
    if let Some(t) = agg.timing {
        eprintln!(
            "{} trials in {:.2} s on {} worker(s)",
            agg.trials, t.wall_seconds, t.workers
        );
    }
    if let (Some(o), Some(json)) = (out, emit::timing_json(agg)) {
        emit::write_file(&emit::with_extension(&o.path, "timing.json"), &json)?;
    }
    Ok(())
}

fn simulate(a: &SimArgs, compare: bool) -> Result<()> {
    let spec = build_spec(a)?;
    let agg = run_experiment(&spec, a.workers)?;
    deliver(spec.output.as_ref(), &a.output.format, |f| match f {
        Format::Csv if compare => emit::compare_csv(&agg),
        Format::Csv => emit::simulate_csv(&agg),
        Format::Json => emit::manifest_json(&agg),
    })?;
    report_timing(&agg, spec.output.as_ref())
}

fn run_sweep(a: &SweepArgs) -> Result<()> {
    let base = build_spec(&a.sim)?;
    let axis = SweepAxis::parse(&a.axis)?;
    let points = sweep(&base, axis, &a.values, a.sim.workers)?;
    deliver(base.output.as_ref(), &a.sim.output.format, |f| match f {
        Format::Csv => emit::sweep_csv(axis.name(), &points),
        Format::Json => {
            let v: Vec<_> = points
                .iter()
                .map(|(value, agg)| serde_json::json!({ "axis": axis.name(), "value": value, "result": agg }))
                .collect();
            serde_json::to_string_pretty(&v).expect("serializes") + "\n"
        }
    })
}

fn run_de(a: &DeArgs) -> Result<()> {
    let mode = match (a.mode, a.upsilon) {
        (ModeArg::Optimal, None) => UpsilonMode::Optimal,
        (ModeArg::Zero, None) => UpsilonMode::Zero,
        (ModeArg::Fixed, Some(u)) => UpsilonMode::Fixed(u),
        (ModeArg::Fixed, None) => {
            return Err(HarnessError::Config("--mode fixed needs --upsilon".into()))
        }
        (_, Some(_)) => {
            return Err(HarnessError::Config(
                "--upsilon only applies to --mode fixed".into(),
            ))
        }
    };
    let de = DensityEvolution::new(DEConfig::new(a.beta, a.sigma0_sq, a.sigma_sq, mode))?;
    let states = de.trajectory(a.iters)?;
    deliver(
        output_spec(&a.output).as_ref(),
        &a.output.format,
        |f| match f {
            Format::Csv => trajectory_csv(&states),
            Format::Json => serde_json::to_string_pretty(&states).expect("serializes") + "\n",
        },
    )
}

fn run_scan(a: &ScanArgs) -> Result<()> {
    if a.g_points == 0 || a.h_points == 0 {
        return Err(HarnessError::Config(
            "grid needs at least one point per axis".into(),
        ));
    }
    if !(a.g_min > 0.0 && a.g_max >= a.g_min) {
        return Err(HarnessError::Config("need 0 < g-min <= g-max".into()));
    }
    if !(a.h_max >= a.h_min) {
        return Err(HarnessError::Config("need h-min <= h-max".into()));
    }
    let cells = regime_scan(
        (a.g_min, a.g_max),
        (a.h_min, a.h_max),
        a.g_points,
        a.h_points,
        a.replicas,
    )?;
    deliver(
        output_spec(&a.output).as_ref(),
        &a.output.format,
        |f| match f {
            Format::Csv => scan_csv(&cells),
            Format::Json => serde_json::to_string_pretty(&cells).expect("serializes") + "\n",
        },
    )
}
