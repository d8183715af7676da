//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 when data or estimation fails, 2 on usage
//! errors (bad flags, unknown methods, alpha outside `(0, 1)`, invalid
//! generator settings).

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::curves::{Alpha, Band, TimeGrid};
use crate::error::SpiError;
use crate::estimators::{bonferroni_band, olshen::DEFAULT_BOOTSTRAP_REPS, EstimatorSettings, Fitted, Method};
use crate::eval::{
    calibration_experiment, coverage_report, discretization_sweep, tightness_experiment, ExperimentReport,
    RunOptions, Truth,
};
use crate::io::{
    read_band_json, read_sample_csv, render_band_svg, write_band_json, write_json, write_report_csv,
    write_sample_csv, BandMetadata,
};
use crate::synth::{LatentGaussianConfig, WeibullFamilyConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "spiband", version, about = "Simultaneous prediction intervals for sampled survival curves")]
struct Cli {
    /// Cap on worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate a band from a sample CSV and write it as JSON.
    Estimate(EstimateArgs),
    /// Score a band JSON against test samples.
    Evaluate(EvaluateArgs),
    /// Write synthetic curves to a sample CSV.
    Synth(SynthArgs),
    /// Observed coverage of fresh samples per method and alpha.
    Calibrate(ExperimentArgs),
    /// Width change against the Bonferroni baseline.
    Tightness(ExperimentArgs),
    /// Band width as a function of grid resolution (Weibull family).
    SweepDiscretization(SweepArgs),
}

fn parse_alpha(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("'{s}' is not a number"))?;
    Alpha::new(v).map(Alpha::value).map_err(|e| e.to_string())
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: SpiError| e.to_string())
}

fn parse_fraction(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("'{s}' is not a number"))?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("split fraction must lie in (0, 1), got {v}"))
    }
}

#[derive(Debug, Args)]
struct EstimateArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value = "gspie", value_parser = parse_method)]
    method: Method,
    #[arg(long, default_value = "0.05", value_parser = parse_alpha)]
    alpha: f64,
    #[arg(long, env = "SPIBAND_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_BOOTSTRAP_REPS)]
    bootstrap_reps: usize,
    #[arg(long, default_value = "0.5", value_parser = parse_fraction)]
    split: f64,
    /// Use the original sample set as the only bootstrap set.
    #[arg(long)]
    no_resample: bool,
    #[arg(long)]
    no_monotone_projection: bool,
    /// Accept rows that are not non-increasing.
    #[arg(long)]
    no_survival_check: bool,
    /// Also write an SVG plot of the band with the mean curve.
    #[arg(long)]
    plot: Option<PathBuf>,
    /// GSPIE only: write the optimization and validation rows to
    /// `<PREFIX>.opt.csv` and `<PREFIX>.val.csv`.
    #[arg(long, value_name = "PREFIX")]
    dump_partitions: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    /// Band JSON written by `estimate`.
    #[arg(long)]
    band: PathBuf,
    /// Test sample CSV.
    #[arg(long)]
    input: PathBuf,
    /// Estimation samples for a Bonferroni baseline at the band's alpha.
    #[arg(long)]
    baseline_input: Option<PathBuf>,
    /// Write the report JSON here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    no_survival_check: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum GeneratorKind {
    Latent,
    Weibull,
}

#[derive(Debug, Args)]
struct GeneratorArgs {
    #[arg(long, value_enum, default_value = "latent")]
    generator: GeneratorKind,
    #[arg(long, default_value_t = 32)]
    n_times: usize,
    /// Last grid time; grids are evenly spaced on (0, horizon].
    #[arg(long, default_value_t = 10.0)]
    horizon: f64,
    #[arg(long, default_value_t = LatentGaussianConfig::DEFAULT_NOISE_SCALE)]
    noise_scale: f64,
    #[arg(long, default_value_t = LatentGaussianConfig::DEFAULT_CORRELATION_DECAY)]
    correlation_decay: f64,
    /// Median Weibull scale (the latent generator's base curve uses it too).
    #[arg(long, default_value_t = WeibullFamilyConfig::DEFAULT_SCALE)]
    scale: f64,
    #[arg(long, default_value_t = WeibullFamilyConfig::DEFAULT_SCALE_SPREAD)]
    scale_spread: f64,
    #[arg(long, default_value_t = WeibullFamilyConfig::DEFAULT_SHAPE)]
    shape: f64,
    #[arg(long, default_value_t = WeibullFamilyConfig::DEFAULT_SHAPE_SPREAD)]
    shape_spread: f64,
}

impl GeneratorArgs {
    fn weibull(&self, grid: TimeGrid) -> WeibullFamilyConfig {
        WeibullFamilyConfig {
            scale_location: self.scale.ln(),
            scale_spread: self.scale_spread,
            shape_location: self.shape.ln(),
            shape_spread: self.shape_spread,
            ..WeibullFamilyConfig::with_defaults(grid)
        }
    }

    fn truth(&self, kind: GeneratorKind, n_times: usize) -> Result<Truth, SpiError> {
        if !(self.scale > 0.0 && self.shape > 0.0) {
            return Err(SpiError::InvalidConfig("scale and shape must be positive".into()));
        }
        let grid = TimeGrid::evenly_spaced(self.horizon, n_times)?;
        let truth = match kind {
            GeneratorKind::Weibull => Truth::Weibull(self.weibull(grid)),
            GeneratorKind::Latent => {
                let base_curve = crate::synth::weibull_curve(&grid, self.scale, self.shape);
                Truth::LatentGaussian(LatentGaussianConfig {
                    base_curve,
                    correlation_decay: self.correlation_decay,
                    noise_scale: self.noise_scale,
                    ..LatentGaussianConfig::with_defaults(grid)
                })
            }
        };
        truth.validate()?;
        Ok(truth)
    }
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[command(flatten)]
    generator: GeneratorArgs,
    #[arg(long, default_value_t = 1000)]
    count: usize,
    #[arg(long, env = "SPIBAND_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long, value_delimiter = ',', default_value = "olshen,olshen2,gspie,bonferroni", value_parser = parse_method)]
    methods: Vec<Method>,
    #[arg(long, default_value_t = 50)]
    trials: usize,
    #[arg(long, env = "SPIBAND_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    est_samples: usize,
    #[arg(long, default_value_t = 10_000)]
    test_samples: usize,
    #[arg(long, default_value_t = DEFAULT_BOOTSTRAP_REPS)]
    bootstrap_reps: usize,
    #[arg(long, default_value = "0.5", value_parser = parse_fraction)]
    split: f64,
    #[arg(long)]
    no_resample: bool,
    #[arg(long)]
    no_monotone_projection: bool,
    /// Per-trial report CSV.
    #[arg(long)]
    output: PathBuf,
    /// Aggregate JSON (defaults to the output path with a `.summary.json` extension).
    #[arg(long)]
    summary: Option<PathBuf>,
}

impl RunArgs {
    fn options(&self) -> Result<RunOptions, SpiError> {
        if self.trials == 0 || self.est_samples < 4 || self.test_samples == 0 || self.bootstrap_reps == 0 {
            return Err(SpiError::InvalidConfig(
                "trials, test samples and bootstrap reps must be positive; est samples at least 4".into(),
            ));
        }
        Ok(RunOptions {
            est_samples: self.est_samples,
            test_samples: self.test_samples,
            bootstrap_reps: self.bootstrap_reps,
            split_fraction: self.split,
            resample: !self.no_resample,
            project: !self.no_monotone_projection,
        })
    }
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    #[command(flatten)]
    run: RunArgs,
    #[command(flatten)]
    generator: GeneratorArgs,
    /// Miscoverage levels (tightness uses only the first).
    #[arg(long, value_delimiter = ',', default_value = "0.05", value_parser = parse_alpha)]
    alphas: Vec<f64>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    run: RunArgs,
    #[command(flatten)]
    generator: GeneratorArgs,
    #[arg(long, value_delimiter = ',', default_value = "8,16,32,64,128,256,512")]
    grid_sizes: Vec<usize>,
    #[arg(long, default_value = "0.05", value_parser = parse_alpha)]
    alpha: f64,
}

/// Failure classes mapped onto exit codes.
enum Failure {
    Usage(String),
    Data(SpiError),
}

impl From<SpiError> for Failure {
    fn from(e: SpiError) -> Self {
        Failure::Data(e)
    }
}

fn usage(e: SpiError) -> Failure {
    Failure::Usage(e.to_string())
}

/// Parses `args` (program name first) and runs the subcommand.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    if let Some(threads) = cli.threads {
        // a global pool can only be installed once per process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads.max(1)).build_global();
    }
    let outcome = match cli.command {
        Command::Estimate(a) => run_estimate(a),
        Command::Evaluate(a) => run_evaluate(a),
        Command::Synth(a) => run_synth(a),
        Command::Calibrate(a) => run_calibrate(a, false),
        Command::Tightness(a) => run_calibrate(a, true),
        Command::SweepDiscretization(a) => run_sweep(a),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e}");
            EXIT_FAILURE
        }
    }
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn run_estimate(a: EstimateArgs) -> Result<(), Failure> {
    let alpha = Alpha::new(a.alpha).map_err(usage)?;
    if a.dump_partitions.is_some() && a.method != Method::Gspie {
        return Err(Failure::Usage("--dump-partitions requires --method gspie".into()));
    }
    if a.bootstrap_reps == 0 {
        return Err(Failure::Usage("--bootstrap-reps must be at least 1".into()));
    }
    let samples = read_sample_csv(&a.input, !a.no_survival_check)?;
    let settings = EstimatorSettings {
        bootstrap_reps: a.bootstrap_reps,
        resample: !a.no_resample,
        split_fraction: a.split,
        seed: a.seed,
    };
    let fitted = Fitted::fit(a.method, &samples, &settings, alpha)?;
    let mut band = fitted.band(alpha)?;
    let project = !a.no_monotone_projection;
    if project {
        band = band.projected();
    }

    if let (Some(prefix), Fitted::Gspie(fit)) = (&a.dump_partitions, &fitted) {
        write_sample_csv(&samples.select_rows(fit.optimization_indices()), with_suffix(prefix, ".opt.csv"))?;
        write_sample_csv(&samples.select_rows(fit.validation_indices()), with_suffix(prefix, ".val.csv"))?;
    }

    let meta = BandMetadata {
        method: a.method.name().to_string(),
        alpha: alpha.value(),
        seed: a.seed,
        config: json!({
            "input": a.input.display().to_string(),
            "n_samples": samples.n_rows(),
            "bootstrap_reps": settings.bootstrap_reps,
            "resample": settings.resample,
            "split_fraction": settings.split_fraction,
            "monotone_projection": project,
        }),
        metrics: None,
    };
    write_band_json(&band, &meta, &a.output)?;

    if let Some(plot) = &a.plot {
        let mean: Vec<f64> = (0..samples.n_times())
            .map(|t| samples.rows().map(|r| r[t]).sum::<f64>() / samples.n_rows() as f64)
            .collect();
        render_band_svg(&band, Some(&mean), plot)?;
    }
    Ok(())
}

fn run_evaluate(a: EvaluateArgs) -> Result<(), Failure> {
    let (band, meta) = read_band_json(&a.band)?;
    let test = read_sample_csv(&a.input, !a.no_survival_check)?;
    let baseline = match &a.baseline_input {
        Some(path) => {
            let est = read_sample_csv(path, !a.no_survival_check)?;
            let alpha = Alpha::new(meta.alpha)?;
            let b: Band = bonferroni_band(&est, alpha)?;
            let projected = meta.config.get("monotone_projection").and_then(|v| v.as_bool()).unwrap_or(true);
            Some(if projected { b.projected() } else { b })
        }
        None => None,
    };
    let report = coverage_report(&band, &test, baseline.as_ref())?;
    match &a.output {
        Some(path) => write_json(&report, path)?,
        None => println!("{}", serde_json::to_string_pretty(&report).map_err(SpiError::from)?),
    }
    Ok(())
}

fn run_synth(a: SynthArgs) -> Result<(), Failure> {
    let truth = a.generator.truth(a.generator.generator, a.generator.n_times).map_err(usage)?;
    if a.count == 0 {
        return Err(Failure::Usage("--count must be at least 1".into()));
    }
    let samples = truth.generate(a.seed, a.count)?;
    write_sample_csv(&samples, &a.output)?;
    Ok(())
}

fn finish_report(report: &ExperimentReport, run: &RunArgs) -> Result<(), Failure> {
    write_report_csv(report, &run.output)?;
    let summary = run
        .summary
        .clone()
        .unwrap_or_else(|| run.output.with_extension("summary.json"));
    write_json(&report.aggregates, summary)?;
    println!("method,alpha,grid_size,trials,coverage_mean,width_mean,percent_change_mean");
    for a in &report.aggregates {
        println!(
            "{},{},{},{},{:.4},{:.4},{}",
            a.method,
            a.alpha,
            a.grid_size,
            a.trials,
            a.coverage_mean,
            a.width_mean,
            a.percent_change_mean.map(|v| format!("{v:.2}")).unwrap_or_default()
        );
    }
    Ok(())
}

fn run_calibrate(a: ExperimentArgs, tightness: bool) -> Result<(), Failure> {
    let opts = a.run.options().map_err(usage)?;
    let truth = a.generator.truth(a.generator.generator, a.generator.n_times).map_err(usage)?;
    let alphas: Vec<Alpha> = a.alphas.iter().map(|&v| Alpha::new(v)).collect::<Result<_, _>>().map_err(usage)?;
    let report = if tightness {
        tightness_experiment(&truth, &a.run.methods, alphas[0], a.run.trials, a.run.seed, &opts)?
    } else {
        calibration_experiment(&truth, &a.run.methods, &alphas, a.run.trials, a.run.seed, &opts)?
    };
    finish_report(&report, &a.run)
}

fn run_sweep(a: SweepArgs) -> Result<(), Failure> {
    let opts = a.run.options().map_err(usage)?;
    if a.grid_sizes.is_empty() || a.grid_sizes.iter().any(|&g| g < 2) {
        return Err(Failure::Usage("--grid-sizes entries must be at least 2".into()));
    }
    let Truth::Weibull(weibull) = a.generator.truth(GeneratorKind::Weibull, 2).map_err(usage)? else {
        unreachable!("Weibull generator requested")
    };
    let alpha = Alpha::new(a.alpha).map_err(usage)?;
    let report = discretization_sweep(&weibull, &a.run.methods, alpha, &a.grid_sizes, a.run.trials, a.run.seed, &opts)?;
    finish_report(&report, &a.run)
}
