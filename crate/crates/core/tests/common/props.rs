//! Randomized checks shared by the property tests and the acceptance runner.
//! Each check draws one case from `rng`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use spiband::estimators::olshen::{BoxFamily, Denominator};
use spiband::estimators::{
    critical_k, estimate, fit_olshen, fit_two_sided_olshen, gspie_step, EstimatorSettings, GspieFit, Method,
    OlshenConfig,
};
use spiband::synth::bootstrap_rows;
use spiband::{bounding_band, pava_antitonic, Alpha, Band};

use super::gen::{self, alpha, bits, free_matrix, survival_matrix};
use super::oracles::{self, matrix_rows};
use super::ensure;

fn close(a: f64, b: f64, tol: f64) -> bool {
    a == b || (a - b).abs() <= tol
}

fn bands_close(a: &Band, b: &Band, tol: f64) -> bool {
    a.lower().iter().zip(b.lower()).all(|(&x, &y)| close(x, y, tol))
        && a.upper().iter().zip(b.upper()).all(|(&x, &y)| close(x, y, tol))
}

fn olshen_cfg(rng: &mut ChaCha8Rng, alpha: Alpha, max_reps: usize) -> OlshenConfig {
    OlshenConfig {
        bootstrap_reps: rng.random_range(1..=max_reps),
        seed: rng.random(),
        ..OlshenConfig::new(alpha)
    }
}

// ---- oracles ----

/// Order-statistic critical k against a scan over every pooled breakpoint.
pub fn k_matches_scan(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let m = rng.random_range(2..=50);
    let n = rng.random_range(1..=5);
    let levels = if rng.random_bool(0.5) { Some(rng.random_range(2..=8)) } else { None };
    let samples = survival_matrix(rng, m, n, levels);
    let a = alpha(rng);
    let cfg = olshen_cfg(rng, a, 20);
    let two_sided = rng.random_bool(0.5);

    let sets = bootstrap_rows(&samples, cfg.seed, cfg.bootstrap_reps).map_err(|e| e.to_string())?;
    let per_set: Vec<Vec<f64>> = sets
        .iter()
        .map(|s| {
            let rows = matrix_rows(s);
            if two_sided {
                oracles::two_sided_distances(&rows)
            } else {
                oracles::olshen_distances(&rows)
            }
        })
        .collect();
    let expected = oracles::scan_critical_k(&per_set, a.value());
    let pooled: Vec<f64> = per_set.iter().flatten().copied().collect();
    let fast = critical_k(&pooled, a).map_err(|e| e.to_string())?.value();
    ensure(fast.to_bits() == expected.to_bits(), || {
        format!("order statistic {fast} != scan {expected}")
    })?;

    let fitted = if two_sided {
        fit_two_sided_olshen(&samples, &cfg).map(|f| f.critical_k(a).value())
    } else {
        fit_olshen(&samples, &cfg).map(|f| f.critical_k(a).value())
    }
    .map_err(|e| e.to_string())?;
    ensure(close(fitted, expected, 1e-9 * expected.abs().max(1.0)), || {
        format!("fitted k {fitted} != oracle k {expected}")
    })
}

/// One greedy step against enumeration of all 2n walls.
pub fn step_matches_enumeration(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let m = rng.random_range(1..=30);
    let n = rng.random_range(1..=4);
    let alphabet: Vec<f64> = (0..=8).map(|i| i as f64 / 8.0).collect();
    let opt = if rng.random_bool(0.7) {
        free_matrix(rng, m, n, Some(&alphabet), 0.0..1.0)
    } else {
        free_matrix(rng, m, n, None, 0.0..1.0)
    };
    let band = match rng.random_range(0..3) {
        0 => bounding_band(&opt).unwrap(),
        1 => Band::unit(gen::grid(n)),
        _ => {
            let mut lower = Vec::new();
            let mut upper = Vec::new();
            for _ in 0..n {
                let a = alphabet[rng.random_range(0..alphabet.len())];
                let b = alphabet[rng.random_range(0..alphabet.len())];
                lower.push(a.min(b));
                upper.push(a.max(b));
            }
            Band::new(gen::grid(n), lower, upper).unwrap()
        }
    };
    let got = gspie_step(&band, &opt).map_err(|e| e.to_string())?;
    let want = oracles::brute_force_step(band.lower(), band.upper(), &matrix_rows(&opt));
    ensure(got == want, || format!("step {got:?} != enumeration {want:?}"))
}

pub fn pava_matches_partitions(v: &[f64]) -> Result<(), String> {
    let got = pava_antitonic(v);
    let want = oracles::pava_by_partitions(v);
    ensure(got.iter().zip(&want).all(|(a, b)| close(*a, *b, 1e-9)), || {
        format!("pava({v:?}) = {got:?}, partitions give {want:?}")
    })
}

pub fn pava_random_matches_partitions(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let n = rng.random_range(1..=8);
    let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..2.0)).collect();
    pava_matches_partitions(&v)
}

/// Every vector of length `1..=max_len` over `alphabet`; returns the count checked.
pub fn pava_exhaustive(alphabet: &[f64], max_len: usize) -> Result<usize, String> {
    let k = alphabet.len();
    let mut checked = 0;
    for len in 1..=max_len {
        let total = k.pow(len as u32);
        let mut v = vec![0.0; len];
        for code in 0..total {
            let mut c = code;
            for slot in v.iter_mut() {
                *slot = alphabet[c % k];
                c /= k;
            }
            pava_matches_partitions(&v)?;
            checked += 1;
        }
    }
    Ok(checked)
}

// ---- estimator properties ----

/// Population and (m-1) denominators give the same Olshen band.
pub fn denominator_invariance(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let m = rng.random_range(3..=40);
    let n = rng.random_range(1..=6);
    let levels = if rng.random_bool(0.3) { Some(10) } else { None };
    let samples = survival_matrix(rng, m, n, levels);
    let a = alpha(rng);
    let cfg = olshen_cfg(rng, a, 30);
    let pop = fit_olshen(&samples, &cfg).unwrap().band_unclipped(a);
    let smp = fit_olshen(
        &samples,
        &OlshenConfig {
            denominator: Denominator::Sample,
            ..cfg
        },
    )
    .unwrap()
    .band_unclipped(a);
    ensure(bands_close(&pop, &smp, 1e-12), || format!("{pop:?} vs {smp:?}"))
}

/// `z_t -> a_t z_t + b_t` maps both Olshen variants' bands the same way.
pub fn olshen_affine_equivariance(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let m = rng.random_range(5..=40);
    let n = rng.random_range(1..=5);
    // samples live in [0, 1], so keep both domains inside it
    let samples = free_matrix(rng, m, n, None, 0.0..0.3);
    let scale: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
    let shift: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..0.4)).collect();
    let moved = gen::map_matrix(&samples, |t, z| scale[t] * z + shift[t]);
    let a = alpha(rng);
    let cfg = olshen_cfg(rng, a, 30);
    let expect = |b: Band| {
        let lower = b.lower().iter().enumerate().map(|(t, &v)| scale[t] * v + shift[t]).collect();
        let upper = b.upper().iter().enumerate().map(|(t, &v)| scale[t] * v + shift[t]).collect();
        Band::new(b.grid().clone(), lower, upper).unwrap()
    };

    let base = expect(fit_olshen(&samples, &cfg).unwrap().band_unclipped(a));
    let got = fit_olshen(&moved, &cfg).unwrap().band_unclipped(a);
    ensure(bands_close(&base, &got, 1e-12), || format!("olshen: {base:?} vs {got:?}"))?;

    let base = expect(fit_two_sided_olshen(&samples, &cfg).unwrap().band_unclipped(a));
    let got = fit_two_sided_olshen(&moved, &cfg).unwrap().band_unclipped(a);
    ensure(bands_close(&base, &got, 1e-12), || format!("two-sided: {base:?} vs {got:?}"))
}

/// `z -> a z + b` with one `(a, b)` leaves the GSPIE path unchanged. Dyadic
/// inputs keep the arithmetic exact.
pub fn gspie_affine_equivariance(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let m = rng.random_range(4..=40);
    let n = rng.random_range(1..=4);
    let dyadic = gen::dyadic_alphabet();
    let (sa, sb, alphabet) = if rng.random_bool(0.5) {
        (0.5, 0.25, &dyadic[..])
    } else {
        (2.0, -0.5, &dyadic[4..=12])
    };
    let samples = free_matrix(rng, m, n, Some(alphabet), 0.0..1.0);
    let moved = gen::map_matrix(&samples, |_, z| sa * z + sb);
    let a = alpha(rng);
    let seed = rng.random();
    let f0 = GspieFit::new(&samples, 0.5, seed, a).map_err(|e| e.to_string())?;
    let f1 = GspieFit::new(&moved, 0.5, seed, a).map_err(|e| e.to_string())?;
    ensure(f0.steps().len() == f1.steps().len(), || "path lengths differ".into())?;
    for (s0, s1) in f0.steps().iter().zip(f1.steps()) {
        let (r0, r1) = (s0.retraction, s1.retraction);
        ensure(
            r0.wall == r1.wall
                && r0.excluded_count == r1.excluded_count
                && sa * r0.new_value + sb == r1.new_value
                && s0.validation_inside == s1.validation_inside,
            || format!("{r0:?} vs {r1:?}"),
        )?;
    }
    let b0 = f0.band(a);
    let b1 = f1.band(a);
    ensure(
        b0.lower().iter().zip(b1.lower()).all(|(&x, &y)| sa * x + sb == y)
            && b0.upper().iter().zip(b1.upper()).all(|(&x, &y)| sa * x + sb == y),
        || format!("{b0:?} vs {b1:?}"),
    )
}

fn gspie_case(rng: &mut ChaCha8Rng) -> (spiband::SampleMatrix, Alpha, GspieFit) {
    let m = rng.random_range(4..=80);
    let n = rng.random_range(1..=6);
    let levels = if rng.random_bool(0.4) { Some(rng.random_range(3..=12)) } else { None };
    let samples = survival_matrix(rng, m, n, levels);
    let a = alpha(rng);
    let split = rng.random_range(0.3..0.7);
    let fit = GspieFit::new(&samples, split, rng.random(), a).unwrap();
    (samples, a, fit)
}

pub fn gspie_validation_coverage(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let (samples, a, fit) = gspie_case(rng);
    let band = fit.band(a);
    let val = fit.validation_indices();
    let inside = val.iter().filter(|&&i| band.contains(samples.row(i)).unwrap()).count();
    ensure(inside as f64 >= a.coverage() * val.len() as f64 - 1e-9, || {
        format!("{inside}/{} validation rows inside at alpha {}", val.len(), a.value())
    })
}

pub fn gspie_width_monotone(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let (_, _, fit) = gspie_case(rng);
    let mut prev = fit.initial_band().total_width();
    for i in 1..=fit.steps().len() {
        let w = fit.band_after(i).total_width();
        ensure(w < prev, || format!("step {i}: width {w} after {prev}"))?;
        prev = w;
    }
    Ok(())
}

pub fn gspie_wall_anchoring(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let (samples, a, fit) = gspie_case(rng);
    let band = fit.band(a);
    for t in 0..band.len() {
        let col = samples.column(t);
        for wall in [band.lower()[t], band.upper()[t]] {
            ensure(col.contains(&wall), || format!("wall {wall} at t={t} is not a sample coordinate"))?;
        }
    }
    Ok(())
}

pub fn projection_idempotent_and_ordered(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let n = rng.random_range(1..=10);
    let band = gen::loose_band(rng, n);
    let once = band.projected();
    let twice = once.projected();
    ensure(bands_close(&once, &twice, 1e-12), || format!("{once:?} then {twice:?}"))?;
    for t in 0..n {
        let (lo, hi) = (once.lower()[t], once.upper()[t]);
        ensure((0.0..=1.0).contains(&lo) && lo <= hi && hi <= 1.0, || format!("bad bounds at {t}: {once:?}"))?;
        if t > 0 {
            ensure(lo <= once.lower()[t - 1] && hi <= once.upper()[t - 1], || format!("increase at {t}: {once:?}"))?;
        }
    }
    Ok(())
}

pub fn pava_mean_and_order(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let n = rng.random_range(1..=20);
    let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..2.0)).collect();
    let fit = pava_antitonic(&v);
    let mean = |x: &[f64]| x.iter().sum::<f64>() / x.len() as f64;
    ensure(close(mean(&v), mean(&fit), 1e-9), || format!("mean changed: {v:?} -> {fit:?}"))?;
    ensure(fit.windows(2).all(|w| w[1] <= w[0]), || format!("not non-increasing: {fit:?}"))
}

/// Projection never drops a survival curve the band already held.
pub fn projection_keeps_survival_rows(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let n = rng.random_range(1..=8);
    let m = rng.random_range(2..=20);
    let base = survival_matrix(rng, m, n, None);
    let bb = bounding_band(&base).unwrap();
    let lower = bb.lower().iter().map(|&l| l - rng.random_range(0.0..0.2)).collect();
    let upper = bb.upper().iter().map(|&u| u + rng.random_range(0.0..0.2)).collect();
    let band = Band::new(bb.grid().clone(), lower, upper).unwrap();
    let projected = band.projected();
    let test = survival_matrix(rng, 50, n, None);
    for row in base.rows().chain(test.rows()) {
        if band.contains(row).unwrap() {
            ensure(projected.contains(row).unwrap(), || format!("{row:?} lost by projection"))?;
        }
    }
    Ok(())
}

/// Coverage is non-decreasing in k, and the chosen k is the first breakpoint
/// reaching `1 - alpha`.
pub fn coverage_monotone_in_k(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let m = rng.random_range(3..=40);
    let n = rng.random_range(1..=5);
    let samples = survival_matrix(rng, m, n, None);
    let a = alpha(rng);
    let fit = fit_olshen(&samples, &olshen_cfg(rng, a, 30)).unwrap();
    let pooled = fit.pooled_distances();
    let frac = |k: f64| pooled.iter().filter(|&&d| d <= k).count() as f64 / pooled.len() as f64;

    let mut ks: Vec<f64> = pooled.iter().copied().filter(|d| d.is_finite()).collect();
    ks.dedup();
    let mut prev_frac = 0.0;
    let mut prev_cov = 0;
    for &k in &ks {
        let f = frac(k);
        let (lower, upper) = fit.stats().bounds(k);
        let box_k = Band::new(samples.grid().clone(), lower, upper).unwrap();
        let cov = samples.rows().filter(|r| box_k.contains(r).unwrap()).count();
        ensure(f >= prev_frac && cov >= prev_cov, || format!("coverage fell at k={k}"))?;
        prev_frac = f;
        prev_cov = cov;
    }

    let k = fit.critical_k(a).value();
    ensure(frac(k) >= a.coverage() - 1e-12, || format!("k={k} covers {}", frac(k)))?;
    if let Some(&below) = pooled.iter().rev().find(|&&d| d < k) {
        ensure(frac(below) < a.coverage(), || format!("smaller breakpoint {below} already covers"))?;
    }
    Ok(())
}

/// Same inputs and seeds give bit-identical bands for every method.
pub fn determinism(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let m = rng.random_range(4..=40);
    let n = rng.random_range(1..=5);
    let samples = survival_matrix(rng, m, n, None);
    let a = alpha(rng);
    let settings = EstimatorSettings {
        bootstrap_reps: rng.random_range(1..=20),
        seed: rng.random(),
        ..EstimatorSettings::default()
    };
    for method in Method::ALL {
        let first = estimate(method, &samples, a, &settings).unwrap();
        let second = estimate(method, &samples, a, &settings).unwrap();
        ensure(bits(&first) == bits(&second), || format!("{method} differs between runs"))?;
    }
    Ok(())
}

/// Every property with the name used in reports.
pub type Check = fn(&mut ChaCha8Rng) -> Result<(), String>;

pub const PROPERTIES: &[(&str, Check)] = &[
    ("denominator invariance", denominator_invariance),
    ("olshen per-coordinate affine equivariance", olshen_affine_equivariance),
    ("gspie common affine equivariance", gspie_affine_equivariance),
    ("gspie validation coverage", gspie_validation_coverage),
    ("gspie width strictly decreasing", gspie_width_monotone),
    ("gspie wall anchoring", gspie_wall_anchoring),
    ("projection idempotent and ordered", projection_idempotent_and_ordered),
    ("pava mean and order", pava_mean_and_order),
    ("projection keeps survival rows", projection_keeps_survival_rows),
    ("coverage monotone in k", coverage_monotone_in_k),
    ("determinism", determinism),
];
