//! Pointwise percentile intervals with a Bonferroni correction.

use crate::curves::{Alpha, Band, SampleMatrix};
use crate::error::{Result, SpiError};

/// Quantile of the ogive: CDF nodes at `(x_(i), i / (m + 1))`, linear in
/// between, clamped to the extreme order statistics outside the nodes.
pub fn ogive_quantile(sorted_values: &[f64], p: f64) -> Result<f64> {
    let m = sorted_values.len();
    if m == 0 {
        return Err(SpiError::EmptyInput);
    }
    let pos = p * (m + 1) as f64;
    if pos <= 1.0 {
        return Ok(sorted_values[0]);
    }
    if pos >= m as f64 {
        return Ok(sorted_values[m - 1]);
    }
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    let (a, b) = (sorted_values[i - 1], sorted_values[i]);
    Ok(if frac == 0.0 { a } else { a + frac * (b - a) })
}

/// Per-time ogive quantiles at `alpha / 2n` and `1 - alpha / 2n`.
pub fn bonferroni_band(samples: &SampleMatrix, alpha: Alpha) -> Result<Band> {
    samples.require_rows(2)?;
    let n = samples.n_times();
    let tail = alpha.value() / (2 * n) as f64;
    let mut lower = Vec::with_capacity(n);
    let mut upper = Vec::with_capacity(n);
    for t in 0..n {
        let mut col = samples.column(t);
        col.sort_unstable_by(f64::total_cmp);
        lower.push(ogive_quantile(&col, tail)?);
        upper.push(ogive_quantile(&col, 1.0 - tail)?);
    }
    Band::new(samples.grid().clone(), lower, upper)
}
