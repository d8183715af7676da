//! Greedy simultaneous prediction interval estimation.
//!
//! Starts from the bounding box of all samples and repeatedly retracts the
//! wall with the best width reduction per excluded optimization sample, onto
//! the nearest optimization-sample coordinate strictly inside the box. The
//! search stops before the first retraction that would leave fewer than
//! `1 - alpha` of the validation samples inside.

use rand::seq::SliceRandom;

use crate::curves::{bounding_band, Alpha, Band, SampleMatrix};
use crate::error::{Result, SpiError};
use crate::rng::{substream, tag};

pub const DEFAULT_SPLIT_FRACTION: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Side {
    Lower,
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Wall {
    pub time_index: usize,
    pub side: Side,
}

/// A candidate move of one wall.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Retraction {
    pub wall: Wall,
    pub new_value: f64,
    pub width_reduction: f64,
    pub excluded_count: usize,
    /// `width_reduction / excluded_count`, infinite when nothing is excluded.
    pub score: f64,
}

impl Retraction {
    fn new(wall: Wall, old: f64, new_value: f64, excluded_count: usize) -> Self {
        let width_reduction = (old - new_value).abs();
        let score = if excluded_count == 0 {
            f64::INFINITY
        } else {
            width_reduction / excluded_count as f64
        };
        Retraction {
            wall,
            new_value,
            width_reduction,
            excluded_count,
            score,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GspieConfig {
    pub alpha: Alpha,
    pub split_fraction: f64,
    pub seed: u64,
}

impl GspieConfig {
    pub fn new(alpha: Alpha) -> Self {
        GspieConfig {
            alpha,
            split_fraction: DEFAULT_SPLIT_FRACTION,
            seed: 0,
        }
    }
}

/// Values of the rows still inside the band, sorted per time point.
struct InsideSet<'a> {
    rows: &'a SampleMatrix,
    inside: Vec<bool>,
    count: usize,
    sorted: Vec<Vec<f64>>,
}

impl<'a> InsideSet<'a> {
    fn new(rows: &'a SampleMatrix, band: &Band) -> Self {
        let inside: Vec<bool> = rows.rows().map(|r| band.contains_unchecked(r)).collect();
        let count = inside.iter().filter(|&&b| b).count();
        let sorted = (0..rows.n_times())
            .map(|t| {
                let mut col: Vec<f64> = rows
                    .rows()
                    .zip(&inside)
                    .filter(|(_, &keep)| keep)
                    .map(|(r, _)| r[t])
                    .collect();
                col.sort_unstable_by(f64::total_cmp);
                col
            })
            .collect();
        InsideSet {
            rows,
            inside,
            count,
            sorted,
        }
    }

    /// Inside rows that fall outside once `wall` moves to `value`.
    fn excluded_by(&self, wall: Wall, value: f64) -> usize {
        let col = &self.sorted[wall.time_index];
        match wall.side {
            Side::Lower => col.partition_point(|&v| v < value),
            Side::Upper => col.len() - col.partition_point(|&v| v <= value),
        }
    }

    fn apply(&mut self, wall: Wall, value: f64) {
        let t = wall.time_index;
        let mut dropped = Vec::new();
        for (i, row) in self.rows.rows().enumerate() {
            if !self.inside[i] {
                continue;
            }
            let out = match wall.side {
                Side::Lower => row[t] < value,
                Side::Upper => row[t] > value,
            };
            if out {
                self.inside[i] = false;
                dropped.push(i);
            }
        }
        for &i in &dropped {
            for (s, col) in self.sorted.iter_mut().enumerate() {
                let z = self.rows.get(i, s);
                let at = col.partition_point(|&v| v < z);
                debug_assert!(col[at] == z);
                col.remove(at);
            }
        }
        self.count -= dropped.len();
    }
}

struct GreedyState<'a> {
    lower: Vec<f64>,
    upper: Vec<f64>,
    opt: InsideSet<'a>,
}

impl<'a> GreedyState<'a> {
    fn new(band: &Band, opt: &'a SampleMatrix) -> Self {
        GreedyState {
            lower: band.lower().to_vec(),
            upper: band.upper().to_vec(),
            opt: InsideSet::new(opt, band),
        }
    }

    fn candidate(&self, wall: Wall) -> Option<Retraction> {
        let t = wall.time_index;
        let (lo, hi) = (self.lower[t], self.upper[t]);
        let col = &self.opt.sorted[t];
        match wall.side {
            Side::Lower => {
                let idx = col.partition_point(|&v| v <= lo);
                let next = *col.get(idx)?;
                // every inside value below `next` sits on the wall
                (next < hi).then(|| Retraction::new(wall, lo, next, idx))
            }
            Side::Upper => {
                let idx = col.partition_point(|&v| v < hi);
                let next = *col.get(idx.checked_sub(1)?)?;
                (next > lo).then(|| Retraction::new(wall, hi, next, col.len() - idx))
            }
        }
    }

    /// Highest-scoring retraction; ties go to lower walls, then to the
    /// smallest time index.
    fn best(&self) -> Option<Retraction> {
        let n = self.lower.len();
        let mut best: Option<Retraction> = None;
        for side in [Side::Lower, Side::Upper] {
            for time_index in 0..n {
                if let Some(c) = self.candidate(Wall { time_index, side }) {
                    if best.is_none_or(|b| c.score > b.score) {
                        best = Some(c);
                    }
                }
            }
        }
        best
    }

    fn apply(&mut self, r: &Retraction) {
        let t = r.wall.time_index;
        match r.wall.side {
            Side::Lower => self.lower[t] = r.new_value,
            Side::Upper => self.upper[t] = r.new_value,
        }
        self.opt.apply(r.wall, r.new_value);
    }
}

/// The best single retraction of `band` with respect to `opt_rows`, or `None`
/// when no wall has an optimization-sample coordinate strictly inside it.
pub fn gspie_step(band: &Band, opt_rows: &SampleMatrix) -> Result<Option<Retraction>> {
    if band.len() != opt_rows.n_times() {
        return Err(SpiError::DimensionMismatch {
            expected: band.len(),
            found: opt_rows.n_times(),
        });
    }
    Ok(GreedyState::new(band, opt_rows).best())
}

/// One accepted step of the greedy path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathStep {
    pub retraction: Retraction,
    /// Validation rows still inside after this step.
    pub validation_inside: usize,
}

/// The greedy retraction path for a fixed optimization/validation split.
///
/// The path depends only on the optimization rows; `alpha` only decides how
/// far along it to stop. The path is followed until the next step would drop
/// validation coverage below the loosest level it was built for.
#[derive(Debug, Clone)]
pub struct GspieFit {
    initial: Band,
    steps: Vec<PathStep>,
    validation_total: usize,
    opt_indices: Vec<usize>,
    val_indices: Vec<usize>,
}

impl GspieFit {
    /// Runs the path on explicit partitions, far enough for every level down
    /// to `loosest` (the largest alpha that will be queried).
    pub fn from_partitions(opt: &SampleMatrix, val: &SampleMatrix, loosest: Alpha) -> Result<Self> {
        if opt.n_rows() == 0 || val.n_rows() == 0 {
            return Err(SpiError::TooFewSamples {
                required: 1,
                found: opt.n_rows().min(val.n_rows()),
            });
        }
        if opt.n_times() != val.n_times() {
            return Err(SpiError::DimensionMismatch {
                expected: opt.n_times(),
                found: val.n_times(),
            });
        }
        let mut union_lower = bounding_band(opt)?.lower().to_vec();
        let mut union_upper = bounding_band(opt)?.upper().to_vec();
        let vb = bounding_band(val)?;
        for t in 0..union_lower.len() {
            union_lower[t] = union_lower[t].min(vb.lower()[t]);
            union_upper[t] = union_upper[t].max(vb.upper()[t]);
        }
        let initial = Band::new(opt.grid().clone(), union_lower, union_upper)?;

        let mut state = GreedyState::new(&initial, opt);
        let mut validation = InsideSet::new(val, &initial);
        let floor = loosest.required_count(val.n_rows());
        let mut steps = Vec::new();
        while let Some(r) = state.best() {
            let after = validation.count - validation.excluded_by(r.wall, r.new_value);
            if after < floor {
                break;
            }
            state.apply(&r);
            validation.apply(r.wall, r.new_value);
            debug_assert_eq!(validation.count, after);
            steps.push(PathStep {
                retraction: r,
                validation_inside: after,
            });
        }
        Ok(GspieFit {
            initial,
            steps,
            validation_total: val.n_rows(),
            opt_indices: (0..opt.n_rows()).collect(),
            val_indices: (0..val.n_rows()).collect(),
        })
    }

    /// Seeded split of `samples` followed by [`GspieFit::from_partitions`].
    pub fn new(samples: &SampleMatrix, split_fraction: f64, seed: u64, loosest: Alpha) -> Result<Self> {
        let (opt_indices, val_indices) = split_rows(samples.n_rows(), split_fraction, seed)?;
        let opt = samples.select_rows(&opt_indices);
        let val = samples.select_rows(&val_indices);
        let mut fit = Self::from_partitions(&opt, &val, loosest)?;
        fit.opt_indices = opt_indices;
        fit.val_indices = val_indices;
        Ok(fit)
    }

    /// Bounding box of the union both partitions.
    pub fn initial_band(&self) -> &Band {
        &self.initial
    }

    pub fn steps(&self) -> &[PathStep] {
        &self.steps
    }

    /// Rows of the source matrix used for optimization.
    pub fn optimization_indices(&self) -> &[usize] {
        &self.opt_indices
    }

    /// Rows of the source matrix used for validation.
    pub fn validation_indices(&self) -> &[usize] {
        &self.val_indices
    }

    /// Number of steps taken for `alpha`.
    pub fn steps_for(&self, alpha: Alpha) -> usize {
        let need = alpha.required_count(self.validation_total);
        self.steps
            .iter()
            .position(|s| s.validation_inside < need)
            .unwrap_or(self.steps.len())
    }

    /// Band after `count` steps of the path.
    pub fn band_after(&self, count: usize) -> Band {
        let mut lower = self.initial.lower().to_vec();
        let mut upper = self.initial.upper().to_vec();
        for step in &self.steps[..count] {
            let r = step.retraction;
            match r.wall.side {
                Side::Lower => lower[r.wall.time_index] = r.new_value,
                Side::Upper => upper[r.wall.time_index] = r.new_value,
            }
        }
        Band::new(self.initial.grid().clone(), lower, upper).expect("retractions stay inside the box")
    }

    /// Unclipped band at `alpha`. Walls always sit on sample coordinates, so
    /// clipping is a no-op for validated matrices.
    pub fn band(&self, alpha: Alpha) -> Band {
        self.band_after(self.steps_for(alpha))
    }
}

/// Seeded shuffle and split into (optimization, validation) row indices.
pub fn split_rows(m: usize, split_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(split_fraction > 0.0 && split_fraction < 1.0) {
        return Err(SpiError::InvalidConfig(format!(
            "split fraction must lie in (0, 1), got {split_fraction}"
        )));
    }
    if m < 4 {
        return Err(SpiError::TooFewSamples { required: 4, found: m });
    }
    let n_opt = (m as f64 * split_fraction).round() as usize;
    if n_opt < 2 || m - n_opt < 2 {
        return Err(SpiError::InvalidConfig(format!(
            "split fraction {split_fraction} leaves fewer than 2 rows in a partition of {m}"
        )));
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(&mut substream(seed, &[tag::SPLIT]));
    let val = order.split_off(n_opt);
    Ok((order, val))
}

pub fn gspie(samples: &SampleMatrix, cfg: &GspieConfig) -> Result<Band> {
    let fit = GspieFit::new(samples, cfg.split_fraction, cfg.seed, cfg.alpha)?;
    Ok(fit.band(cfg.alpha).clipped())
}
