//! Synthetic curve distributions and bootstrap resampling.
//!
//! Each generated row draws from its own substream `(seed, CURVE, row)`, and
//! each bootstrap set from `(seed, BOOTSTRAP, set)`, so output never depends
//! on evaluation order.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::curves::{SampleMatrix, TimeGrid};
use crate::error::{Result, SpiError};
use crate::rng::{substream, tag};

/// Weibull survival curves `S(t) = exp(-(t / scale)^shape)` with log-normal
/// scale and shape.
#[derive(Debug, Clone, PartialEq)]
pub struct WeibullFamilyConfig {
    pub grid: TimeGrid,
    /// Mean of `ln(scale)`.
    pub scale_location: f64,
    /// Standard deviation of `ln(scale)`.
    pub scale_spread: f64,
    /// Mean of `ln(shape)`.
    pub shape_location: f64,
    /// Standard deviation of `ln(shape)`.
    pub shape_spread: f64,
    pub seed: u64,
}

impl WeibullFamilyConfig {
    pub const DEFAULT_SCALE: f64 = 5.0;
    pub const DEFAULT_SCALE_SPREAD: f64 = 0.25;
    pub const DEFAULT_SHAPE: f64 = 1.2;
    pub const DEFAULT_SHAPE_SPREAD: f64 = 0.15;

    /// Median scale 5 and shape 1.2 with moderate log-normal spread.
    pub fn with_defaults(grid: TimeGrid) -> Self {
        WeibullFamilyConfig {
            grid,
            scale_location: Self::DEFAULT_SCALE.ln(),
            scale_spread: Self::DEFAULT_SCALE_SPREAD,
            shape_location: Self::DEFAULT_SHAPE.ln(),
            shape_spread: Self::DEFAULT_SHAPE_SPREAD,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.scale_location, self.scale_spread, self.shape_location, self.shape_spread]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.scale_spread < 0.0 || self.shape_spread < 0.0 {
            return Err(SpiError::InvalidConfig(
                "Weibull parameters must be finite with non-negative spreads".into(),
            ));
        }
        if self.grid.times()[0] <= 0.0 {
            return Err(SpiError::InvalidConfig("Weibull grid times must be positive".into()));
        }
        Ok(())
    }
}

/// Curves built by perturbing `base_curve` on the logit scale with a
/// stationary Gaussian AR(1) process, squashing back and sorting each row
/// into non-increasing order.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentGaussianConfig {
    pub grid: TimeGrid,
    pub base_curve: Vec<f64>,
    /// Lag-`dt` correlation is `exp(-correlation_decay * dt)`.
    pub correlation_decay: f64,
    pub noise_scale: f64,
    pub seed: u64,
}

impl LatentGaussianConfig {
    pub const DEFAULT_CORRELATION_DECAY: f64 = 0.02;
    pub const DEFAULT_NOISE_SCALE: f64 = 0.5;

    /// Weibull-shaped base curve with strongly correlated latent noise.
    pub fn with_defaults(grid: TimeGrid) -> Self {
        let base_curve = weibull_curve(
            &grid,
            WeibullFamilyConfig::DEFAULT_SCALE,
            WeibullFamilyConfig::DEFAULT_SHAPE,
        );
        LatentGaussianConfig {
            grid,
            base_curve,
            correlation_decay: Self::DEFAULT_CORRELATION_DECAY,
            noise_scale: Self::DEFAULT_NOISE_SCALE,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.base_curve.len() != self.grid.len() {
            return Err(SpiError::InvalidConfig(format!(
                "base curve has {} points, grid has {}",
                self.base_curve.len(),
                self.grid.len()
            )));
        }
        if self.base_curve.iter().any(|v| !(0.0..=1.0).contains(v))
            || self.base_curve.windows(2).any(|w| w[1] > w[0])
        {
            return Err(SpiError::InvalidConfig(
                "base curve must be non-increasing within [0, 1]".into(),
            ));
        }
        if !(self.correlation_decay >= 0.0 && self.correlation_decay.is_finite())
            || !(self.noise_scale >= 0.0 && self.noise_scale.is_finite())
        {
            return Err(SpiError::InvalidConfig(
                "correlation_decay and noise_scale must be finite and non-negative".into(),
            ));
        }
        Ok(())
    }
}

fn generate_rows<F>(grid: &TimeGrid, count: usize, row: F) -> Result<SampleMatrix>
where
    F: Fn(usize) -> Vec<f64> + Sync,
{
    if count == 0 {
        return Err(SpiError::InvalidConfig("count must be at least 1".into()));
    }
    let rows: Vec<Vec<f64>> = (0..count).into_par_iter().map(&row).collect();
    SampleMatrix::from_flat(grid.clone(), rows.concat(), true)
}

pub fn gen_weibull_curves(cfg: &WeibullFamilyConfig, count: usize) -> Result<SampleMatrix> {
    cfg.validate()?;
    generate_rows(&cfg.grid, count, |i| {
        let mut rng = substream(cfg.seed, &[tag::CURVE, i as u64]);
        let zs: f64 = rng.sample(StandardNormal);
        let zk: f64 = rng.sample(StandardNormal);
        let scale = (cfg.scale_location + cfg.scale_spread * zs).exp();
        let shape = (cfg.shape_location + cfg.shape_spread * zk).exp();
        weibull_curve(&cfg.grid, scale, shape)
    })
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn gen_latent_gaussian_curves(cfg: &LatentGaussianConfig, count: usize) -> Result<SampleMatrix> {
    cfg.validate()?;
    let times = cfg.grid.times();
    let latent_base: Vec<f64> = cfg.base_curve.iter().map(|&p| logit(p)).collect();
    let rho: Vec<f64> = times
        .windows(2)
        .map(|w| (-cfg.correlation_decay * (w[1] - w[0])).exp())
        .collect();
    generate_rows(&cfg.grid, count, |i| {
        if cfg.noise_scale == 0.0 {
            return cfg.base_curve.clone();
        }
        let mut rng = substream(cfg.seed, &[tag::CURVE, i as u64]);
        let mut e: f64 = rng.sample(StandardNormal);
        let mut row = Vec::with_capacity(times.len());
        row.push(sigmoid(latent_base[0] + cfg.noise_scale * e));
        for (t, &r) in rho.iter().enumerate() {
            let xi: f64 = rng.sample(StandardNormal);
            e = r * e + (1.0 - r * r).sqrt() * xi;
            row.push(sigmoid(latent_base[t + 1] + cfg.noise_scale * e));
        }
        row.sort_unstable_by(|a, b| b.total_cmp(a));
        row
    })
}

/// Weibull-shaped reference curve `exp(-(t / scale)^shape)` on `grid`.
pub fn weibull_curve(grid: &TimeGrid, scale: f64, shape: f64) -> Vec<f64> {
    // clamping guards against pow/exp rounding breaking monotonicity
    let mut curve: Vec<f64> = grid.times().iter().map(|&t| (-(t / scale).powf(shape)).exp()).collect();
    for t in 1..curve.len() {
        curve[t] = curve[t].min(curve[t - 1]);
    }
    curve
}

/// Row indices of bootstrap set `set_index`: `m` draws with replacement.
pub fn bootstrap_indices(m: usize, seed: u64, set_index: u64) -> Vec<usize> {
    let mut rng = substream(seed, &[tag::BOOTSTRAP, set_index]);
    (0..m).map(|_| rng.random_range(0..m)).collect()
}

pub fn bootstrap_rows(samples: &SampleMatrix, seed: u64, count_sets: usize) -> Result<Vec<SampleMatrix>> {
    let m = samples.n_rows();
    if m == 0 {
        return Err(SpiError::EmptyMatrix);
    }
    Ok((0..count_sets)
        .into_par_iter()
        .map(|b| samples.select_rows(&bootstrap_indices(m, seed, b as u64)))
        .collect())
}
