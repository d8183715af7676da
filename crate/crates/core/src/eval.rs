//! Accuracy and tightness metrics, and the Monte-Carlo experiment harnesses.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curves::{Alpha, Band, SampleMatrix, TimeGrid};
use crate::error::{Result, SpiError};
use crate::estimators::{bonferroni_band, EstimatorSettings, Fitted, Method};
use crate::rng::{derive_seed, tag};
use crate::synth::{gen_latent_gaussian_curves, gen_weibull_curves, LatentGaussianConfig, WeibullFamilyConfig};

/// Normal quantile used for the 95% intervals on mean widths.
const Z95: f64 = 1.959_963_984_540_054;

fn check_grid(band: &Band, test: &SampleMatrix) -> Result<()> {
    if band.grid() != test.grid() {
        return Err(if band.len() == test.n_times() {
            SpiError::GridMismatch
        } else {
            SpiError::DimensionMismatch {
                expected: band.len(),
                found: test.n_times(),
            }
        });
    }
    Ok(())
}

/// Number of test rows inside `band`.
pub fn covered_count(band: &Band, test: &SampleMatrix) -> Result<usize> {
    check_grid(band, test)?;
    Ok(test.rows().filter(|r| band.contains_unchecked(r)).count())
}

/// Fraction of test rows inside `band`.
pub fn observed_coverage(band: &Band, test: &SampleMatrix) -> Result<f64> {
    if test.n_rows() == 0 {
        return Err(SpiError::EmptyMatrix);
    }
    Ok(covered_count(band, test)? as f64 / test.n_rows() as f64)
}

pub fn average_width(band: &Band) -> f64 {
    band.total_width() / band.len() as f64
}

/// `100 * (width - baseline) / baseline`.
pub fn percent_change(width: f64, baseline_width: f64) -> Result<f64> {
    if baseline_width > 0.0 {
        Ok(100.0 * (width - baseline_width) / baseline_width)
    } else if width == 0.0 && baseline_width == 0.0 {
        // degenerate data: both bands collapse
        Ok(0.0)
    } else {
        Err(SpiError::ZeroBaseline(width))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub observed_coverage: f64,
    pub covered_count: usize,
    pub n_test_samples: usize,
    pub average_width: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub percent_change_vs_baseline: Option<f64>,
}

pub fn coverage_report(band: &Band, test: &SampleMatrix, baseline: Option<&Band>) -> Result<CoverageReport> {
    if test.n_rows() == 0 {
        return Err(SpiError::EmptyMatrix);
    }
    let covered = covered_count(band, test)?;
    let width = average_width(band);
    let percent_change_vs_baseline = baseline
        .map(|b| percent_change(width, average_width(b)))
        .transpose()?;
    Ok(CoverageReport {
        observed_coverage: covered as f64 / test.n_rows() as f64,
        covered_count: covered,
        n_test_samples: test.n_rows(),
        average_width: width,
        percent_change_vs_baseline,
    })
}

/// A controlled curve distribution to draw estimation and test samples from.
#[derive(Debug, Clone, PartialEq)]
pub enum Truth {
    LatentGaussian(LatentGaussianConfig),
    Weibull(WeibullFamilyConfig),
}

impl Truth {
    pub fn grid(&self) -> &TimeGrid {
        match self {
            Truth::LatentGaussian(c) => &c.grid,
            Truth::Weibull(c) => &c.grid,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Truth::LatentGaussian(c) => c.validate(),
            Truth::Weibull(c) => c.validate(),
        }
    }

    pub fn generate(&self, seed: u64, count: usize) -> Result<SampleMatrix> {
        match self {
            Truth::LatentGaussian(c) => gen_latent_gaussian_curves(&LatentGaussianConfig { seed, ..c.clone() }, count),
            Truth::Weibull(c) => gen_weibull_curves(&WeibullFamilyConfig { seed, ..c.clone() }, count),
        }
    }
}

/// Sample sizes and estimator knobs shared by the harnesses.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub est_samples: usize,
    pub test_samples: usize,
    pub bootstrap_reps: usize,
    pub split_fraction: f64,
    pub resample: bool,
    /// Project bands into survival space before scoring them.
    pub project: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        let est = EstimatorSettings::default();
        RunOptions {
            est_samples: 1000,
            test_samples: 10_000,
            bootstrap_reps: est.bootstrap_reps,
            split_fraction: est.split_fraction,
            resample: true,
            project: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub method: String,
    pub alpha: f64,
    pub grid_size: usize,
    pub observed_coverage: f64,
    pub average_width: f64,
    pub percent_change: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub method: String,
    pub alpha: f64,
    pub grid_size: usize,
    pub trials: usize,
    pub coverage_mean: f64,
    pub coverage_sd: f64,
    pub width_mean: f64,
    pub width_sd: f64,
    /// Normal-approximation 95% interval for the mean width.
    pub width_ci95: [f64; 2],
    pub percent_change_mean: Option<f64>,
    pub percent_change_sd: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub records: Vec<TrialRecord>,
    pub aggregates: Vec<AggregateRow>,
}

impl ExperimentReport {
    pub fn from_records(records: Vec<TrialRecord>) -> Self {
        let aggregates = aggregate(&records);
        ExperimentReport { records, aggregates }
    }

    pub fn find(&self, method: Method, alpha: f64, grid_size: usize) -> Option<&AggregateRow> {
        self.aggregates
            .iter()
            .find(|a| a.method == method.name() && a.alpha == alpha && a.grid_size == grid_size)
    }
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Groups records by (method, alpha, grid size) in order of first appearance.
pub fn aggregate(records: &[TrialRecord]) -> Vec<AggregateRow> {
    let mut keys: Vec<(&str, f64, usize)> = Vec::new();
    for r in records {
        let key = (r.method.as_str(), r.alpha, r.grid_size);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(method, alpha, grid_size)| {
            let group: Vec<&TrialRecord> = records
                .iter()
                .filter(|r| r.method == method && r.alpha == alpha && r.grid_size == grid_size)
                .collect();
            let cov: Vec<f64> = group.iter().map(|r| r.observed_coverage).collect();
            let width: Vec<f64> = group.iter().map(|r| r.average_width).collect();
            let pc: Option<Vec<f64>> = group.iter().map(|r| r.percent_change).collect();
            let (coverage_mean, coverage_sd) = mean_sd(&cov);
            let (width_mean, width_sd) = mean_sd(&width);
            let half = Z95 * width_sd / (width.len() as f64).sqrt();
            let pc_stats = pc.filter(|v| !v.is_empty()).map(|v| mean_sd(&v));
            AggregateRow {
                method: method.to_string(),
                alpha,
                grid_size,
                trials: group.len(),
                coverage_mean,
                coverage_sd,
                width_mean,
                width_sd,
                width_ci95: [width_mean - half, width_mean + half],
                percent_change_mean: pc_stats.map(|s| s.0),
                percent_change_sd: pc_stats.map(|s| s.1),
            }
        })
        .collect()
}

fn run_trial(
    truth: &Truth,
    methods: &[Method],
    alphas: &[Alpha],
    trial: usize,
    seed: u64,
    opts: &RunOptions,
) -> Result<Vec<TrialRecord>> {
    let trial_seed = derive_seed(seed, &[tag::TRIAL, trial as u64]);
    let est = truth.generate(derive_seed(trial_seed, &[0]), opts.est_samples)?;
    let test = truth.generate(derive_seed(trial_seed, &[1]), opts.test_samples)?;
    let settings = EstimatorSettings {
        bootstrap_reps: opts.bootstrap_reps,
        resample: opts.resample,
        split_fraction: opts.split_fraction,
        seed: derive_seed(trial_seed, &[2]),
    };
    let finish = |band: Band| if opts.project { band.projected() } else { band };

    let baselines: Vec<f64> = alphas
        .iter()
        .map(|&a| Ok(average_width(&finish(bonferroni_band(&est, a)?))))
        .collect::<Result<_>>()?;
    let loosest = alphas
        .iter()
        .copied()
        .fold(alphas[0], |a, b| if b > a { b } else { a });

    let mut records = Vec::with_capacity(methods.len() * alphas.len());
    for &method in methods {
        let fitted = Fitted::fit(method, &est, &settings, loosest)?;
        for (&alpha, &baseline) in alphas.iter().zip(&baselines) {
            let band = finish(fitted.band(alpha)?);
            let width = average_width(&band);
            records.push(TrialRecord {
                trial,
                method: method.name().to_string(),
                alpha: alpha.value(),
                grid_size: band.len(),
                observed_coverage: observed_coverage(&band, &test)?,
                average_width: width,
                percent_change: Some(percent_change(width, baseline)?),
            });
        }
    }
    Ok(records)
}

fn run_trials(
    truth: &Truth,
    methods: &[Method],
    alphas: &[Alpha],
    trials: usize,
    seed: u64,
    opts: &RunOptions,
) -> Result<Vec<TrialRecord>> {
    if trials == 0 || methods.is_empty() || alphas.is_empty() {
        return Err(SpiError::InvalidConfig(
            "experiments need at least one trial, method and alpha".into(),
        ));
    }
    truth.validate()?;
    let per_trial: Vec<Vec<TrialRecord>> = (0..trials)
        .into_par_iter()
        .map(|trial| run_trial(truth, methods, alphas, trial, seed, opts))
        .collect::<Result<_>>()?;
    Ok(per_trial.into_iter().flatten().collect())
}

/// Observed coverage of fresh test samples for every method and level.
pub fn calibration_experiment(
    truth: &Truth,
    methods: &[Method],
    alphas: &[Alpha],
    trials: usize,
    seed: u64,
    opts: &RunOptions,
) -> Result<ExperimentReport> {
    run_trials(truth, methods, alphas, trials, seed, opts).map(ExperimentReport::from_records)
}

/// Percent change in average width against the Bonferroni band on the same samples.
pub fn tightness_experiment(
    truth: &Truth,
    methods: &[Method],
    alpha: Alpha,
    trials: usize,
    seed: u64,
    opts: &RunOptions,
) -> Result<ExperimentReport> {
    run_trials(truth, methods, &[alpha], trials, seed, opts).map(ExperimentReport::from_records)
}

/// Reruns the Weibull family on evenly spaced grids of each size over the
/// horizon of `weibull.grid` (its last time point).
///
/// Trial seeds do not depend on the grid size, so every resolution sees the
/// same underlying curves.
pub fn discretization_sweep(
    weibull: &WeibullFamilyConfig,
    methods: &[Method],
    alpha: Alpha,
    grid_sizes: &[usize],
    trials: usize,
    seed: u64,
    opts: &RunOptions,
) -> Result<ExperimentReport> {
    if grid_sizes.is_empty() || grid_sizes.iter().any(|&g| g < 2) {
        return Err(SpiError::InvalidConfig("grid sizes must be non-empty and each >= 2".into()));
    }
    let horizon = *weibull.grid.times().last().expect("grids are non-empty");
    let mut records = Vec::new();
    for &size in grid_sizes {
        let truth = Truth::Weibull(WeibullFamilyConfig {
            grid: TimeGrid::evenly_spaced(horizon, size)?,
            ..weibull.clone()
        });
        records.extend(run_trials(&truth, methods, &[alpha], trials, seed, opts)?);
    }
    Ok(ExperimentReport::from_records(records))
}
