//! Slow reference implementations written directly from the definitions.

use spiband::estimators::{Retraction, Side, Wall};
use spiband::SampleMatrix;

/// Least-squares non-increasing fit by enumerating every contiguous block
/// partition and keeping the feasible one with the smallest squared error.
pub fn pava_by_partitions(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    if n == 0 {
        return Vec::new();
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    // bit i set means a block boundary after position i
    for mask in 0u32..(1 << (n - 1)) {
        let mut fit = Vec::with_capacity(n);
        let mut start = 0;
        let mut feasible = true;
        let mut prev_mean = f64::INFINITY;
        for end in 0..n {
            if end == n - 1 || mask & (1 << end) != 0 {
                let block = &v[start..=end];
                let mean = block.iter().sum::<f64>() / block.len() as f64;
                if mean > prev_mean {
                    feasible = false;
                    break;
                }
                prev_mean = mean;
                fit.extend(std::iter::repeat_n(mean, block.len()));
                start = end + 1;
            }
        }
        if !feasible {
            continue;
        }
        let sse: f64 = v.iter().zip(&fit).map(|(a, b)| (a - b).powi(2)).sum();
        if best.as_ref().is_none_or(|(s, _)| sse < *s) {
            best = Some((sse, fit));
        }
    }
    best.expect("the single-block partition is always feasible").1
}

fn spread_or_degenerate(diff: f64, spread: f64) -> f64 {
    if spread > 0.0 {
        diff / spread
    } else if diff <= 1e-12 {
        0.0
    } else {
        f64::INFINITY
    }
}

fn all_equal(col: &[f64]) -> bool {
    col.iter().all(|&z| z == col[0])
}

/// Per-row Olshen distances against the row set's own mean and population sd.
pub fn olshen_distances(rows: &[Vec<f64>]) -> Vec<f64> {
    let m = rows.len() as f64;
    let n = rows[0].len();
    let mut mu = vec![0.0; n];
    let mut sigma = vec![0.0; n];
    for t in 0..n {
        let col: Vec<f64> = rows.iter().map(|r| r[t]).collect();
        if all_equal(&col) {
            mu[t] = col[0];
            continue;
        }
        mu[t] = col.iter().sum::<f64>() / m;
        sigma[t] = (col.iter().map(|z| (z - mu[t]).powi(2)).sum::<f64>() / m).sqrt();
    }
    rows.iter()
        .map(|r| {
            (0..n)
                .map(|t| spread_or_degenerate((r[t] - mu[t]).abs(), sigma[t]))
                .fold(0.0, f64::max)
        })
        .collect()
}

/// Per-row two-sided distances against the median and one-sided RMS spreads.
pub fn two_sided_distances(rows: &[Vec<f64>]) -> Vec<f64> {
    let n = rows[0].len();
    let mut med = vec![0.0; n];
    let mut plus = vec![0.0; n];
    let mut minus = vec![0.0; n];
    for t in 0..n {
        let mut col: Vec<f64> = rows.iter().map(|r| r[t]).collect();
        col.sort_by(f64::total_cmp);
        let m = col.len();
        med[t] = if m % 2 == 1 {
            col[m / 2]
        } else {
            (col[m / 2 - 1] + col[m / 2]) / 2.0
        };
        let rms = |vals: Vec<f64>| (vals.iter().map(|d| d * d).sum::<f64>() / vals.len() as f64).sqrt();
        plus[t] = rms(col.iter().filter(|&&z| z >= med[t]).map(|z| z - med[t]).collect());
        minus[t] = rms(col.iter().filter(|&&z| z <= med[t]).map(|z| med[t] - z).collect());
    }
    rows.iter()
        .map(|r| {
            (0..n)
                .map(|t| {
                    if r[t] < med[t] {
                        spread_or_degenerate(med[t] - r[t], minus[t])
                    } else {
                        spread_or_degenerate(r[t] - med[t], plus[t])
                    }
                })
                .fold(0.0, f64::max)
        })
        .collect()
}

/// Smallest candidate `k` whose mean within-set coverage reaches `1 - alpha`,
/// found by scanning every distinct distance in increasing order.
pub fn scan_critical_k(per_set: &[Vec<f64>], alpha: f64) -> f64 {
    let mut candidates: Vec<f64> = per_set.iter().flatten().copied().collect();
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();
    for k in candidates {
        let mean = per_set
            .iter()
            .map(|s| s.iter().filter(|&&d| d <= k).count() as f64 / s.len() as f64)
            .sum::<f64>()
            / per_set.len() as f64;
        if mean >= 1.0 - alpha - 1e-12 {
            return k;
        }
    }
    unreachable!("the largest candidate covers every set")
}

pub fn matrix_rows(samples: &SampleMatrix) -> Vec<Vec<f64>> {
    samples.rows().map(<[f64]>::to_vec).collect()
}

/// Best single retraction found by trying all `2n` walls in tie-break order
/// (lower walls first, then upper; ascending time index within each side).
pub fn brute_force_step(lower: &[f64], upper: &[f64], rows: &[Vec<f64>]) -> Option<Retraction> {
    let n = lower.len();
    let inside: Vec<&Vec<f64>> = rows
        .iter()
        .filter(|r| (0..n).all(|t| lower[t] <= r[t] && r[t] <= upper[t]))
        .collect();
    let mut best: Option<Retraction> = None;
    for side in [Side::Lower, Side::Upper] {
        for t in 0..n {
            let (lo, hi) = (lower[t], upper[t]);
            let interior: Vec<f64> = inside.iter().map(|r| r[t]).filter(|&z| lo < z && z < hi).collect();
            if interior.is_empty() {
                continue;
            }
            let (new_value, excluded, reduction) = match side {
                Side::Lower => {
                    let v = interior.iter().copied().fold(f64::INFINITY, f64::min);
                    (v, inside.iter().filter(|r| r[t] < v).count(), v - lo)
                }
                Side::Upper => {
                    let v = interior.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    (v, inside.iter().filter(|r| r[t] > v).count(), hi - v)
                }
            };
            let score = if excluded == 0 {
                f64::INFINITY
            } else {
                reduction / excluded as f64
            };
            if best.is_none_or(|b| score > b.score) {
                best = Some(Retraction {
                    wall: Wall { time_index: t, side },
                    new_value,
                    width_reduction: reduction,
                    excluded_count: excluded,
                    score,
                });
            }
        }
    }
    best
}
