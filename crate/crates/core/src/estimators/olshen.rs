//! Olshen's method and its two-sided variant.
//!
//! Both build a family of boxes `center ± k * spread` and pick `k` by
//! bootstrapping: every member of every bootstrap set gets the smallest `k`
//! whose box (built from that set's own statistics) contains it, and the
//! critical `k` is an order statistic of the pooled values. The final band
//! uses the statistics of the original sample set.

use rayon::prelude::*;

use crate::curves::{Alpha, Band, SampleMatrix};
use crate::error::{Result, SpiError};
use crate::synth::bootstrap_indices;

/// Deviations at or below this are treated as zero on a zero-spread column.
pub const DEGENERATE_TOLERANCE: f64 = 1e-12;

pub const DEFAULT_BOOTSTRAP_REPS: usize = 1000;

/// Divisor used for the standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Denominator {
    /// Divide by `m`.
    #[default]
    Population,
    /// Divide by `m - 1`.
    Sample,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OlshenConfig {
    pub alpha: Alpha,
    pub bootstrap_reps: usize,
    pub seed: u64,
    /// When false the original set is the single "bootstrap" set.
    pub resample: bool,
    pub denominator: Denominator,
}

impl OlshenConfig {
    pub fn new(alpha: Alpha) -> Self {
        OlshenConfig {
            alpha,
            bootstrap_reps: DEFAULT_BOOTSTRAP_REPS,
            seed: 0,
            resample: true,
            denominator: Denominator::Population,
        }
    }

    fn effective_reps(&self) -> Result<usize> {
        if !self.resample {
            return Ok(1);
        }
        if self.bootstrap_reps == 0 {
            return Err(SpiError::InvalidConfig("bootstrap_reps must be at least 1".into()));
        }
        Ok(self.bootstrap_reps)
    }
}

/// Per-time mean and standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnStats {
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
}

/// Per-time median with separate root-mean-square spreads above and below it.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoSidedStats {
    pub med: Vec<f64>,
    pub sigma_minus: Vec<f64>,
    pub sigma_plus: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct CriticalK(f64);

impl CriticalK {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// A center-and-spread box family `O_k`.
pub trait BoxFamily: Send + Sync {
    /// Smallest `k` whose box contains `sample`.
    fn distance(&self, sample: &[f64]) -> f64;
    /// Bounds of the box at `k`.
    fn bounds(&self, k: f64) -> (Vec<f64>, Vec<f64>);
    fn len(&self) -> usize;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[inline]
fn scaled(diff: f64, spread: f64) -> f64 {
    if spread > 0.0 {
        diff / spread
    } else if diff <= DEGENERATE_TOLERANCE {
        0.0
    } else {
        f64::INFINITY
    }
}

#[inline]
fn offset(center: f64, k: f64, spread: f64) -> f64 {
    // avoids inf * 0 when k is unbounded on a zero-spread column
    if spread == 0.0 {
        center
    } else {
        center + k * spread
    }
}

impl BoxFamily for ColumnStats {
    fn distance(&self, sample: &[f64]) -> f64 {
        sample
            .iter()
            .zip(self.mu.iter().zip(&self.sigma))
            .map(|(&z, (&mu, &sigma))| scaled((z - mu).abs(), sigma))
            .fold(0.0, f64::max)
    }

    fn bounds(&self, k: f64) -> (Vec<f64>, Vec<f64>) {
        let lower = self.mu.iter().zip(&self.sigma).map(|(&m, &s)| offset(m, -k, s)).collect();
        let upper = self.mu.iter().zip(&self.sigma).map(|(&m, &s)| offset(m, k, s)).collect();
        (lower, upper)
    }

    fn len(&self) -> usize {
        self.mu.len()
    }
}

impl BoxFamily for TwoSidedStats {
    fn distance(&self, sample: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for (t, &z) in sample.iter().enumerate() {
            let med = self.med[t];
            let d = if z < med {
                scaled(med - z, self.sigma_minus[t])
            } else {
                scaled(z - med, self.sigma_plus[t])
            };
            worst = worst.max(d);
        }
        worst
    }

    fn bounds(&self, k: f64) -> (Vec<f64>, Vec<f64>) {
        let lower = self
            .med
            .iter()
            .zip(&self.sigma_minus)
            .map(|(&m, &s)| offset(m, -k, s))
            .collect();
        let upper = self
            .med
            .iter()
            .zip(&self.sigma_plus)
            .map(|(&m, &s)| offset(m, k, s))
            .collect();
        (lower, upper)
    }

    fn len(&self) -> usize {
        self.med.len()
    }
}

/// Mean/sd of the multiset holding `counts[i]` copies of row `i`.
fn weighted_column_stats(samples: &SampleMatrix, counts: &[u32], denominator: Denominator) -> ColumnStats {
    let n = samples.n_times();
    let total: u32 = counts.iter().sum();
    let mut sum = vec![0.0; n];
    let mut lo = vec![f64::INFINITY; n];
    let mut hi = vec![f64::NEG_INFINITY; n];
    for (row, &c) in samples.rows().zip(counts) {
        if c == 0 {
            continue;
        }
        let w = c as f64;
        for t in 0..n {
            let z = row[t];
            sum[t] += w * z;
            lo[t] = lo[t].min(z);
            hi[t] = hi[t].max(z);
        }
    }
    let mu: Vec<f64> = (0..n)
        .map(|t| if lo[t] == hi[t] { lo[t] } else { sum[t] / total as f64 })
        .collect();
    let mut sq = vec![0.0; n];
    for (row, &c) in samples.rows().zip(counts) {
        if c == 0 {
            continue;
        }
        let w = c as f64;
        for t in 0..n {
            let d = row[t] - mu[t];
            sq[t] += w * d * d;
        }
    }
    let divisor = match denominator {
        Denominator::Population => total as f64,
        Denominator::Sample => (total - 1) as f64,
    };
    let sigma = (0..n)
        .map(|t| if lo[t] == hi[t] { 0.0 } else { (sq[t] / divisor).sqrt() })
        .collect();
    ColumnStats { mu, sigma }
}

/// Row indices sorted by value, one ordering per time point.
fn column_orders(samples: &SampleMatrix) -> Vec<Vec<u32>> {
    (0..samples.n_times())
        .map(|t| {
            let mut order: Vec<u32> = (0..samples.n_rows() as u32).collect();
            order.sort_by(|&a, &b| samples.get(a as usize, t).total_cmp(&samples.get(b as usize, t)));
            order
        })
        .collect()
}

fn weighted_two_sided_stats(samples: &SampleMatrix, counts: &[u32], orders: &[Vec<u32>]) -> TwoSidedStats {
    let n = samples.n_times();
    let total: u32 = counts.iter().sum();
    let lo_pos = (total - 1) / 2;
    let hi_pos = total / 2;
    let med: Vec<f64> = orders
        .iter()
        .enumerate()
        .map(|(t, order)| {
            let mut cum = 0u32;
            let mut lo_val = None;
            for &i in order {
                let c = counts[i as usize];
                if c == 0 {
                    continue;
                }
                cum += c;
                let z = samples.get(i as usize, t);
                if lo_val.is_none() && cum > lo_pos {
                    lo_val = Some(z);
                }
                if cum > hi_pos {
                    let a = lo_val.unwrap_or(z);
                    return if a == z { z } else { 0.5 * (a + z) };
                }
            }
            unreachable!("median position lies within the multiset")
        })
        .collect();

    let mut sum_plus = vec![0.0; n];
    let mut n_plus = vec![0u32; n];
    let mut sum_minus = vec![0.0; n];
    let mut n_minus = vec![0u32; n];
    for (row, &c) in samples.rows().zip(counts) {
        if c == 0 {
            continue;
        }
        let w = c as f64;
        for t in 0..n {
            let d = row[t] - med[t];
            if d >= 0.0 {
                sum_plus[t] += w * d * d;
                n_plus[t] += c;
            }
            if d <= 0.0 {
                sum_minus[t] += w * d * d;
                n_minus[t] += c;
            }
        }
    }
    // both sides always hold at least the median's own order statistic
    let rms = |s: &[f64], k: &[u32]| -> Vec<f64> {
        s.iter().zip(k).map(|(&s, &k)| (s / k as f64).sqrt()).collect()
    };
    TwoSidedStats {
        sigma_plus: rms(&sum_plus, &n_plus),
        sigma_minus: rms(&sum_minus, &n_minus),
        med,
    }
}

pub fn column_stats(samples: &SampleMatrix) -> Result<ColumnStats> {
    column_stats_with(samples, Denominator::Population)
}

pub fn column_stats_with(samples: &SampleMatrix, denominator: Denominator) -> Result<ColumnStats> {
    samples.require_rows(2)?;
    Ok(weighted_column_stats(samples, &vec![1; samples.n_rows()], denominator))
}

pub fn two_sided_stats(samples: &SampleMatrix) -> Result<TwoSidedStats> {
    samples.require_rows(2)?;
    Ok(weighted_two_sided_stats(
        samples,
        &vec![1; samples.n_rows()],
        &column_orders(samples),
    ))
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(SpiError::DimensionMismatch { expected, found })
    }
}

/// Smallest `k` for which the mean ± k·sd box contains `sample`.
pub fn sample_max_distance(sample: &[f64], stats: &ColumnStats) -> Result<f64> {
    check_len(stats.len(), sample.len())?;
    Ok(stats.distance(sample))
}

/// Smallest `k` for which the two-sided box contains `sample`.
pub fn two_sided_distance(sample: &[f64], stats: &TwoSidedStats) -> Result<f64> {
    check_len(stats.len(), sample.len())?;
    Ok(stats.distance(sample))
}

/// The `q`-th smallest pooled distance, `q = ceil((1 - alpha) * len)`.
///
/// Every bootstrap set has the same size, so the mean of the per-set
/// coverages equals the pooled empirical CDF and this order statistic is the
/// smallest `k` whose mean coverage reaches `1 - alpha`.
pub fn critical_k(pooled: &[f64], alpha: Alpha) -> Result<CriticalK> {
    if pooled.is_empty() {
        return Err(SpiError::EmptyInput);
    }
    let mut values = pooled.to_vec();
    let q = alpha.required_count(values.len()).max(1);
    let (_, kth, _) = values.select_nth_unstable_by(q - 1, f64::total_cmp);
    Ok(CriticalK(*kth))
}

fn critical_k_sorted(sorted: &[f64], alpha: Alpha) -> CriticalK {
    let q = alpha.required_count(sorted.len()).max(1);
    CriticalK(sorted[q - 1])
}

/// Original-set statistics together with the sorted pooled bootstrap distances.
///
/// The pooled distances do not depend on `alpha`, so one fit serves any
/// number of miscoverage levels.
#[derive(Debug, Clone)]
pub struct OlshenFit<S> {
    stats: S,
    pooled: Vec<f64>,
    grid: crate::curves::TimeGrid,
}

impl<S: BoxFamily> OlshenFit<S> {
    pub fn stats(&self) -> &S {
        &self.stats
    }

    /// Pooled per-member distances, ascending.
    pub fn pooled_distances(&self) -> &[f64] {
        &self.pooled
    }

    pub fn critical_k(&self, alpha: Alpha) -> CriticalK {
        critical_k_sorted(&self.pooled, alpha)
    }

    /// Band before clipping into `[0, 1]`.
    pub fn band_unclipped(&self, alpha: Alpha) -> Band {
        let (lower, upper) = self.stats.bounds(self.critical_k(alpha).value());
        Band::new(self.grid.clone(), lower, upper).expect("box bounds are ordered")
    }

    pub fn band(&self, alpha: Alpha) -> Band {
        self.band_unclipped(alpha).clipped()
    }
}

fn fit_with<S, F>(samples: &SampleMatrix, cfg: &OlshenConfig, set_stats: F) -> Result<OlshenFit<S>>
where
    S: BoxFamily,
    F: Fn(&[u32]) -> S + Sync,
{
    samples.require_rows(2)?;
    let m = samples.n_rows();
    let reps = cfg.effective_reps()?;
    let ones = vec![1u32; m];
    let stats = set_stats(&ones);

    let per_set: Vec<Vec<f64>> = (0..reps)
        .into_par_iter()
        .map(|b| {
            let counts = if cfg.resample {
                let mut counts = vec![0u32; m];
                for i in bootstrap_indices(m, cfg.seed, b as u64) {
                    counts[i] += 1;
                }
                counts
            } else {
                ones.clone()
            };
            let set = set_stats(&counts);
            let mut out = Vec::with_capacity(m);
            for (row, &c) in samples.rows().zip(&counts) {
                if c > 0 {
                    let d = set.distance(row);
                    out.extend(std::iter::repeat_n(d, c as usize));
                }
            }
            out
        })
        .collect();

    let mut pooled: Vec<f64> = per_set.into_iter().flatten().collect();
    pooled.sort_unstable_by(f64::total_cmp);
    Ok(OlshenFit {
        stats,
        pooled,
        grid: samples.grid().clone(),
    })
}

/// Bootstrap fit for Olshen's symmetric mean ± k·sd boxes. `cfg.alpha` is unused.
pub fn fit_olshen(samples: &SampleMatrix, cfg: &OlshenConfig) -> Result<OlshenFit<ColumnStats>> {
    fit_with(samples, cfg, |counts| {
        weighted_column_stats(samples, counts, cfg.denominator)
    })
}

/// Bootstrap fit for the two-sided median boxes. `cfg.alpha` is unused.
pub fn fit_two_sided_olshen(samples: &SampleMatrix, cfg: &OlshenConfig) -> Result<OlshenFit<TwoSidedStats>> {
    samples.require_rows(2)?;
    let orders = column_orders(samples);
    fit_with(samples, cfg, |counts| {
        weighted_two_sided_stats(samples, counts, &orders)
    })
}

pub fn olshen(samples: &SampleMatrix, cfg: &OlshenConfig) -> Result<Band> {
    Ok(fit_olshen(samples, cfg)?.band(cfg.alpha))
}

pub fn two_sided_olshen(samples: &SampleMatrix, cfg: &OlshenConfig) -> Result<Band> {
    Ok(fit_two_sided_olshen(samples, cfg)?.band(cfg.alpha))
}
