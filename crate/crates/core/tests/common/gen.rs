use rand::Rng;
use rand_chacha::ChaCha8Rng;
use spiband::{Alpha, Band, SampleMatrix, TimeGrid};

pub fn grid(n: usize) -> TimeGrid {
    TimeGrid::evenly_spaced(1.0, n).unwrap()
}

pub fn alpha(rng: &mut ChaCha8Rng) -> Alpha {
    Alpha::new(rng.random_range(0.01..0.5)).unwrap()
}

/// Non-increasing rows in `[0, 1]`, optionally snapped to multiples of `1/levels`.
pub fn survival_matrix(rng: &mut ChaCha8Rng, m: usize, n: usize, levels: Option<u32>) -> SampleMatrix {
    let mut flat = Vec::with_capacity(m * n);
    for _ in 0..m {
        let mut v: f64 = rng.random_range(0.3..=1.0);
        for _ in 0..n {
            let x = match levels {
                Some(l) => (v * l as f64).round() / l as f64,
                None => v,
            };
            flat.push(x);
            v *= rng.random_range(0.5..=1.0);
        }
    }
    // snapping can break monotonicity by rounding, so repair with a running min
    for row in flat.chunks_mut(n) {
        for t in 1..n {
            row[t] = row[t].min(row[t - 1]);
        }
    }
    SampleMatrix::from_flat(grid(n), flat, true).unwrap()
}

/// Unconstrained rows with values drawn from `alphabet` or uniformly from `range`.
pub fn free_matrix(
    rng: &mut ChaCha8Rng,
    m: usize,
    n: usize,
    alphabet: Option<&[f64]>,
    range: std::ops::Range<f64>,
) -> SampleMatrix {
    let flat = (0..m * n)
        .map(|_| match alphabet {
            Some(a) => a[rng.random_range(0..a.len())],
            None => rng.random_range(range.clone()),
        })
        .collect();
    SampleMatrix::from_flat(grid(n), flat, false).unwrap()
}

/// Multiples of 1/16 in [0, 1]: exact under halving and adding 0.25.
pub fn dyadic_alphabet() -> Vec<f64> {
    (0..=16).map(|i| i as f64 / 16.0).collect()
}

/// Random ordered band with bounds in `[-0.2, 1.2]`.
pub fn loose_band(rng: &mut ChaCha8Rng, n: usize) -> Band {
    let mut lower = Vec::with_capacity(n);
    let mut upper = Vec::with_capacity(n);
    for _ in 0..n {
        let a: f64 = rng.random_range(-0.2..1.2);
        let b: f64 = rng.random_range(-0.2..1.2);
        lower.push(a.min(b));
        upper.push(a.max(b));
    }
    Band::new(grid(n), lower, upper).unwrap()
}

pub fn map_matrix(samples: &SampleMatrix, f: impl Fn(usize, f64) -> f64) -> SampleMatrix {
    let n = samples.n_times();
    let flat = samples
        .as_flat()
        .iter()
        .enumerate()
        .map(|(i, &z)| f(i % n, z))
        .collect();
    SampleMatrix::from_flat(samples.grid().clone(), flat, false).unwrap()
}

pub fn bits(band: &Band) -> (Vec<u64>, Vec<u64>) {
    (
        band.lower().iter().map(|v| v.to_bits()).collect(),
        band.upper().iter().map(|v| v.to_bits()).collect(),
    )
}
