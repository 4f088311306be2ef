//! The `mcompress` command line.
//!
//! Exit codes: 0 on success, 1 on invalid input or a failed check, 2 on I/O
//! errors. Failures print one line `error[<kind>]: <message>` on stderr.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::compressor::{compress_with, CompressConfig, SCHEMA_VERSION};
use crate::diversity::{self, compare_iid_with};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::gradcheck::{self, GradCheckSettings};
use crate::io;
use crate::metric::{KernelParam, ZeroDisplacement};
use crate::optimizer::{Method, OptimizerConfig};
use crate::streams::{stream, Stream};
use crate::targets::{self, TargetSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_IO: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "mcompress",
    version,
    about = "Compress a probability measure into a few representative points"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compress a target into J points.
    Compress(CompressArgs),
    /// Score a points file against a target.
    Evaluate(EvaluateArgs),
    /// Compare compressed and i.i.d. point sets over many seeds.
    Compare(CompareArgs),
    /// Check the analytic gradient against finite differences.
    Gradcheck(GradcheckArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TargetKind {
    Gaussian,
    Mixture,
    Empirical,
}

#[derive(Debug, Args)]
pub struct TargetArgs {
    #[arg(long, value_enum, default_value = "gaussian")]
    pub target: TargetKind,
    /// Dimension L. Required to match the file for mixture and empirical targets.
    #[arg(long)]
    pub dim: Option<usize>,
    /// JSON file `{ "weights": [..], "means": [[..],..], "scales": [..] }`.
    #[arg(long = "mixture-spec")]
    pub mixture_spec: Option<PathBuf>,
    /// Points CSV with the empirical sample.
    #[arg(long)]
    pub empirical: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long = "J", default_value_t = 10)]
    pub num_points: usize,
    #[arg(long = "B", default_value_t = 1000)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 2000)]
    pub iters: usize,
    /// Kernel smoothing length.
    #[arg(long, default_value_t = crate::metric::DEFAULT_SMOOTHING)]
    pub a: f64,
    /// With a = 0, use the zero subgradient at coincident points instead of failing.
    #[arg(long = "zero-subgradient")]
    pub zero_subgradient: bool,
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
    #[arg(long, default_value = "adam")]
    pub optimizer: Method,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long = "loss-every", default_value_t = 10)]
    pub loss_every: usize,
}

#[derive(Debug, Args)]
pub struct CompressArgs {
    #[command(flatten)]
    pub target: TargetArgs,
    #[command(flatten)]
    pub run: RunArgs,
    /// Output points CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Output run report JSON.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub target: TargetArgs,
    /// Points CSV to score.
    #[arg(long)]
    pub points: PathBuf,
    #[arg(long = "ref-size", default_value_t = 100_000)]
    pub ref_size: usize,
    #[arg(long, default_value_t = crate::metric::DEFAULT_SMOOTHING)]
    pub a: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = diversity::DEFAULT_REPETITION_THRESHOLD)]
    pub threshold: f64,
    /// Write the metrics JSON here as well as to stdout.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub target: TargetArgs,
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long = "n-seeds", default_value_t = 100)]
    pub n_seeds: usize,
    #[arg(long = "ref-size", default_value_t = 100_000)]
    pub ref_size: usize,
    #[arg(long, default_value_t = diversity::DEFAULT_REPETITION_THRESHOLD)]
    pub threshold: f64,
    /// Output comparison report JSON.
    #[arg(long)]
    pub report: PathBuf,
    /// Output per-seed CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    #[arg(long, default_value_t = 200)]
    pub instances: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write the per-cell results as JSON.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

impl TargetArgs {
    pub fn resolve(&self) -> Result<TargetSpec> {
        let target = match self.target {
            TargetKind::Gaussian => TargetSpec::standard_gaussian(self.dim.unwrap_or(2)),
            TargetKind::Mixture => {
                let path = self.mixture_spec.as_deref().ok_or_else(|| {
                    Error::invalid("--target mixture needs --mixture-spec <json file>")
                })?;
                TargetSpec::GaussianMixture(io::read_mixture_spec(path)?)
            }
            TargetKind::Empirical => {
                let path = self.empirical.as_deref().ok_or_else(|| {
                    Error::invalid("--target empirical needs --empirical <csv file>")
                })?;
                targets::load_empirical(path, None)?
            }
        };
        target.ensure_valid()?;
        if let Some(dim) = self.dim {
            if dim != target.dim() {
                return Err(Error::DimensionMismatch(format!(
                    "--dim {dim}, target file L={}",
                    target.dim()
                )));
            }
        }
        Ok(target)
    }
}

impl RunArgs {
    pub fn config(&self, dim: usize) -> Result<CompressConfig> {
        let mut kernel = KernelParam::new(self.a)?;
        if self.zero_subgradient {
            kernel = kernel.with_zero_displacement(ZeroDisplacement::Subgradient);
        }
        let config = CompressConfig {
            num_points: self.num_points,
            dim,
            batch_size: self.batch_size,
            max_iters: self.iters,
            kernel,
            optimizer: OptimizerConfig::with_method(self.optimizer, self.lr),
            seed: self.seed,
            record_loss_every: self.loss_every,
        };
        config.validate()?;
        Ok(config)
    }
}

#[derive(Serialize)]
struct EvaluateOutput<'a> {
    schema_version: u32,
    points_file: &'a Path,
    num_points: usize,
    dim: usize,
    target: &'a TargetSpec,
    kernel: KernelParam,
    ref_size: usize,
    reference_self_points: usize,
    seed: u64,
    threshold: f64,
    energy_to_ref: f64,
    min_pairwise_distance: Option<f64>,
    repetition_count: Option<usize>,
}

fn to_json_line<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string(value).map_err(|e| Error::invalid(e.to_string()))
}

fn run_compress(args: &CompressArgs, out: &mut dyn Write) -> Result<()> {
    let target = args.target.resolve()?;
    let config = args.run.config(target.dim())?;
    writeln!(out, "{}", to_json_line(&config)?).ok();
    let report = compress_with(&target, &config, &Execution::from_env())?;
    io::write_points_csv(&args.out, &report.final_points)?;
    if let Some(path) = &args.report {
        io::write_json(path, &report)?;
    }
    writeln!(
        out,
        "final_loss_estimate={:.6e} ref_size={} wall_time={:.3}s",
        report.final_loss_estimate, report.final_loss_ref_size, report.wall_time_seconds
    )
    .ok();
    Ok(())
}

fn run_evaluate(args: &EvaluateArgs, out: &mut dyn Write) -> Result<()> {
    let points = io::read_points_csv(&args.points)?;
    let target = args.target.resolve()?;
    if points.dim() != target.dim() {
        return Err(Error::DimensionMismatch(format!(
            "points L={}, target L={}",
            points.dim(),
            target.dim()
        )));
    }
    if args.ref_size == 0 {
        return Err(Error::invalid("--ref-size must be >= 1"));
    }
    let kernel = KernelParam::new(args.a)?;
    let exec = Execution::from_env();
    let reference = target.sample(args.ref_size, &mut stream(args.seed, Stream::Evaluation))?;
    let (ref_self, ref_points) = diversity::reference_self_term(&reference, &kernel, &exec)?;
    let energy = diversity::energy_to_reference(&points, &reference, ref_self, &kernel, &exec)?;
    let pairwise = points.len() >= 2;
    let output = EvaluateOutput {
        schema_version: SCHEMA_VERSION,
        points_file: &args.points,
        num_points: points.len(),
        dim: points.dim(),
        target: &target,
        kernel,
        ref_size: args.ref_size,
        reference_self_points: ref_points,
        seed: args.seed,
        threshold: args.threshold,
        energy_to_ref: energy,
        min_pairwise_distance: pairwise
            .then(|| diversity::min_pairwise_distance(&points))
            .transpose()?,
        repetition_count: pairwise
            .then(|| diversity::repetition_count(&points, args.threshold))
            .transpose()?,
    };
    if let Some(path) = &args.report {
        io::write_json(path, &output)?;
    }
    writeln!(out, "{}", to_json_line(&output)?).ok();
    Ok(())
}

fn run_compare(args: &CompareArgs, out: &mut dyn Write) -> Result<()> {
    let target = args.target.resolve()?;
    let config = args.run.config(target.dim())?;
    writeln!(out, "{}", to_json_line(&config)?).ok();
    let report = compare_iid_with(
        &target,
        &config,
        args.n_seeds,
        args.ref_size,
        args.threshold,
        &Execution::from_env(),
    )?;
    io::write_json(&args.report, &report)?;
    if let Some(path) = &args.out {
        report.write_seed_csv(path)?;
    }
    let s = &report.summary;
    writeln!(
        out,
        "seeds={} win_rate(energy)={:.3} win_rate(min_pairwise)={:.3} \
         median_min_pairwise iid={:.4} compressed={:.4} mean_repetitions iid={:.3} compressed={:.3}",
        report.n_seeds,
        report.win_rates.energy_to_ref,
        report.win_rates.min_pairwise,
        s.iid_min_pairwise.p50,
        s.compressed_min_pairwise.p50,
        s.iid_repetitions.mean,
        s.compressed_repetitions.mean
    )
    .ok();
    Ok(())
}

fn run_gradcheck(args: &GradcheckArgs, out: &mut dyn Write) -> Result<bool> {
    let report = gradcheck::run(&GradCheckSettings {
        instances: args.instances,
        seed: args.seed,
        ..GradCheckSettings::default()
    })?;
    write!(out, "{}", report.table()).ok();
    if let Some(path) = &args.report {
        io::write_json(path, &report)?;
    }
    Ok(report.passed)
}

fn error_line(kind: &str, message: &str) -> String {
    format!("error[{kind}]: {}", message.replace(['\n', '\r'], " "))
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    write!(out, "{e}").ok();
                    EXIT_OK
                }
                _ => {
                    let first = e.to_string().lines().next().unwrap_or_default().to_string();
                    let first = first.trim_start_matches("error: ").to_string();
                    writeln!(err, "{}", error_line("usage", &first)).ok();
                    EXIT_INVALID
                }
            };
        }
    };

    let result = match &cli.command {
        Command::Compress(a) => run_compress(a, out).map(|_| true),
        Command::Evaluate(a) => run_evaluate(a, out).map(|_| true),
        Command::Compare(a) => run_compare(a, out).map(|_| true),
        Command::Gradcheck(a) => run_gradcheck(a, out),
    };
    match result {
        Ok(true) => EXIT_OK,
        Ok(false) => {
            writeln!(
                err,
                "{}",
                error_line("check", "gradient check exceeded tolerance")
            )
            .ok();
            EXIT_INVALID
        }
        Err(e) if e.is_io() => {
            writeln!(err, "{}", error_line("io", &e.to_string())).ok();
            EXIT_IO
        }
        Err(e) => {
            writeln!(err, "{}", error_line("validation", &e.to_string())).ok();
            EXIT_INVALID
        }
    }
}
