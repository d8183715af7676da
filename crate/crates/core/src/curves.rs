//! Time grids, sample matrices, bands and the projection into survival space.
//!
//! A survival curve on an `n`-point grid is a vector in `[0, 1]^n` whose
//! entries never increase left to right. A [`Band`] is an axis-aligned box
//! `prod_t [lower_t, upper_t]`; a curve is covered when it lies inside the box,
//! walls included.

use crate::error::{Result, SpiError};

/// Row-to-row increase tolerated when ingesting curves flagged as survival curves.
pub const MONOTONE_TOLERANCE: f64 = 1e-9;

/// Strictly increasing evaluation times.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    times: Vec<f64>,
}

impl TimeGrid {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.is_empty() {
            return Err(SpiError::EmptyGrid);
        }
        if let Some(index) = times.iter().position(|t| !t.is_finite()) {
            return Err(SpiError::InvalidConfig(format!(
                "time {} at index {index} is not finite",
                times[index]
            )));
        }
        for (i, pair) in times.windows(2).enumerate() {
            if pair[0] >= pair[1] {
                return Err(SpiError::NonIncreasingGrid {
                    index: i + 1,
                    previous: pair[0],
                    current: pair[1],
                });
            }
        }
        Ok(TimeGrid { times })
    }

    /// `count` evenly spaced points `horizon * i / count` for `i = 1..=count`.
    pub fn evenly_spaced(horizon: f64, count: usize) -> Result<Self> {
        if horizon.is_nan() || horizon <= 0.0 || count == 0 {
            return Err(SpiError::InvalidConfig(format!(
                "evenly spaced grid needs horizon > 0 and count >= 1 (got {horizon}, {count})"
            )));
        }
        TimeGrid::new(
            (1..=count)
                .map(|i| horizon * i as f64 / count as f64)
                .collect(),
        )
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Miscoverage level, strictly inside `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Alpha(f64);

impl Alpha {
    pub fn new(value: f64) -> Result<Self> {
        if value > 0.0 && value < 1.0 {
            Ok(Alpha(value))
        } else {
            Err(SpiError::InvalidAlpha(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Prescribed coverage `1 - alpha`.
    pub fn coverage(self) -> f64 {
        1.0 - self.0
    }

    /// Smallest count `c` out of `total` with `c / total >= 1 - alpha`.
    ///
    /// The product is snapped before rounding up so that round-off in
    /// `1 - alpha` cannot push an exact integer to the next one.
    pub fn required_count(self, total: usize) -> usize {
        let target = self.coverage() * total as f64;
        let need = (target - 1e-9).ceil();
        (need.max(0.0) as usize).min(total)
    }
}

/// `m` sampled curves evaluated on a shared grid, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    grid: TimeGrid,
    values: Vec<f64>,
    n_rows: usize,
    survival: bool,
}

impl SampleMatrix {
    /// Builds a matrix from row-major values, running the same checks as
    /// [`validate_matrix`].
    pub fn from_flat(grid: TimeGrid, values: Vec<f64>, survival: bool) -> Result<Self> {
        let n = grid.len();
        if !values.len().is_multiple_of(n) {
            return Err(SpiError::RaggedRows {
                row: values.len() / n,
                expected: n,
                found: values.len() % n,
            });
        }
        let n_rows = values.len() / n;
        for (row, chunk) in values.chunks_exact(n).enumerate() {
            check_row(row, chunk, survival)?;
        }
        Ok(SampleMatrix {
            grid,
            values,
            n_rows,
            survival,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_times(&self) -> usize {
        self.grid.len()
    }

    /// Whether rows were validated as survival curves.
    pub fn is_survival(&self) -> bool {
        self.survival
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.n_times();
        &self.values[i * n..(i + 1) * n]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.n_times())
    }

    pub fn get(&self, row: usize, time: usize) -> f64 {
        self.values[row * self.n_times() + time]
    }

    pub fn column(&self, time: usize) -> Vec<f64> {
        self.rows().map(|r| r[time]).collect()
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.values
    }

    /// New matrix holding the given rows in the given order (repeats allowed).
    pub fn select_rows(&self, indices: &[usize]) -> SampleMatrix {
        let mut values = Vec::with_capacity(indices.len() * self.n_times());
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        SampleMatrix {
            grid: self.grid.clone(),
            values,
            n_rows: indices.len(),
            survival: self.survival,
        }
    }

    pub(crate) fn require_rows(&self, required: usize) -> Result<()> {
        if self.n_rows < required {
            Err(SpiError::TooFewSamples {
                required,
                found: self.n_rows,
            })
        } else {
            Ok(())
        }
    }
}

fn check_row(row: usize, values: &[f64], survival: bool) -> Result<()> {
    for (column, &value) in values.iter().enumerate() {
        if !(0.0..=1.0).contains(&value) {
            return Err(SpiError::OutOfRange { row, column, value });
        }
    }
    if survival {
        for (column, pair) in values.windows(2).enumerate() {
            let increase = pair[1] - pair[0];
            if increase > MONOTONE_TOLERANCE {
                return Err(SpiError::NotMonotone {
                    row,
                    column,
                    increase,
                });
            }
        }
    }
    Ok(())
}

/// Validates raw rows against a grid. With `survival` set, each row must be
/// non-increasing up to [`MONOTONE_TOLERANCE`].
pub fn validate_matrix(rows: Vec<Vec<f64>>, grid: TimeGrid, survival: bool) -> Result<SampleMatrix> {
    let n = grid.len();
    let mut values = Vec::with_capacity(rows.len() * n);
    for (row, r) in rows.into_iter().enumerate() {
        if r.len() != n {
            return Err(SpiError::RaggedRows {
                row,
                expected: n,
                found: r.len(),
            });
        }
        check_row(row, &r, survival)?;
        values.extend(r);
    }
    SampleMatrix::from_flat(grid, values, survival)
}

/// An orthotope `prod_t [lower_t, upper_t]` over a time grid.
///
/// Bounds may leave `[0, 1]` (Olshen-style bands before clipping) but are
/// never NaN and always satisfy `lower <= upper`.
#[derive(Debug, Clone, PartialEq)]
pub struct Band {
    grid: TimeGrid,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Band {
    pub fn new(grid: TimeGrid, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let n = grid.len();
        for v in [&lower, &upper] {
            if v.len() != n {
                return Err(SpiError::DimensionMismatch {
                    expected: n,
                    found: v.len(),
                });
            }
        }
        for t in 0..n {
            if lower[t].is_nan() || upper[t].is_nan() {
                return Err(SpiError::InvalidBand(format!("NaN bound at index {t}")));
            }
            if lower[t] > upper[t] {
                return Err(SpiError::InvalidBand(format!(
                    "lower {} exceeds upper {} at index {t}",
                    lower[t], upper[t]
                )));
            }
        }
        Ok(Band { grid, lower, upper })
    }

    /// The full cube `[0, 1]^n`.
    pub fn unit(grid: TimeGrid) -> Self {
        let n = grid.len();
        Band {
            grid,
            lower: vec![0.0; n],
            upper: vec![1.0; n],
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    /// Closed-interval membership: a sample on a wall is inside.
    pub fn contains(&self, sample: &[f64]) -> Result<bool> {
        if sample.len() != self.len() {
            return Err(SpiError::DimensionMismatch {
                expected: self.len(),
                found: sample.len(),
            });
        }
        Ok(self.contains_unchecked(sample))
    }

    pub(crate) fn contains_unchecked(&self, sample: &[f64]) -> bool {
        sample
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(&z, (&lo, &hi))| lo <= z && z <= hi)
    }

    /// Sum over time points of `upper - lower`.
    pub fn total_width(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(l, u)| u - l).sum()
    }

    /// Bounds clamped into `[0, 1]`.
    pub fn clipped(&self) -> Band {
        Band {
            grid: self.grid.clone(),
            lower: self.lower.iter().map(|v| v.clamp(0.0, 1.0)).collect(),
            upper: self.upper.iter().map(|v| v.clamp(0.0, 1.0)).collect(),
        }
    }

    pub fn projected(&self) -> Band {
        project_band(self)
    }
}

/// Smallest band containing every row: per-column min and max.
pub fn bounding_band(samples: &SampleMatrix) -> Result<Band> {
    if samples.n_rows() == 0 {
        return Err(SpiError::EmptyMatrix);
    }
    let mut lower = samples.row(0).to_vec();
    let mut upper = lower.clone();
    for row in samples.rows().skip(1) {
        for (t, &z) in row.iter().enumerate() {
            lower[t] = lower[t].min(z);
            upper[t] = upper[t].max(z);
        }
    }
    Band::new(samples.grid().clone(), lower, upper)
}

/// Least-squares projection onto `{b : b_i >= b_{i+1}}` by pool-adjacent-violators.
pub fn pava_antitonic(v: &[f64]) -> Vec<f64> {
    // (sum, count) per pooled block
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(v.len());
    for &x in v {
        blocks.push((x, 1));
        while blocks.len() > 1 {
            let (s1, c1) = blocks[blocks.len() - 1];
            let (s0, c0) = blocks[blocks.len() - 2];
            if s0 / c0 as f64 >= s1 / c1 as f64 {
                break;
            }
            blocks.pop();
            let last = blocks.len() - 1;
            blocks[last] = (s0 + s1, c0 + c1);
        }
    }
    let mut out = Vec::with_capacity(v.len());
    for (sum, count) in blocks {
        let mean = if count == 1 { sum } else { sum / count as f64 };
        out.extend(std::iter::repeat_n(mean, count));
    }
    out
}

/// Projects both bounds into survival space: PAVA, then clamp to `[0, 1]`.
pub fn project_band(band: &Band) -> Band {
    let project = |v: &[f64]| -> Vec<f64> {
        pava_antitonic(v)
            .into_iter()
            .map(|x| x.clamp(0.0, 1.0))
            .collect()
    };
    let upper = project(&band.upper);
    let lower: Vec<f64> = project(&band.lower)
        .into_iter()
        .zip(&upper)
        // block means can disagree in the last ulp
        .map(|(l, &u)| l.min(u))
        .collect();
    Band {
        grid: band.grid.clone(),
        lower,
        upper,
    }
}
