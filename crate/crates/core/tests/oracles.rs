use proptest::prelude::*;
use rand::Rng;
use time2cluster::{
    augment_matrix, corr_to_dist, correlation_matrix, correlation_matrix_capped, dist_to_corr,
    distance_profile, CorrelationMatrix, Method, RngSeed, TimeSeries,
};

/// Pearson correlation of every pair of length-m windows, straight from the
/// definition. Flat windows correlate 0 with everything but themselves.
fn pearson_oracle(values: &[f64], m: usize) -> Vec<f64> {
    let count = values.len() - m + 1;
    let stats: Vec<(f64, f64)> = (0..count)
        .map(|i| {
            let w = &values[i..i + m];
            let mu = w.iter().sum::<f64>() / m as f64;
            let ss = w.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>();
            (mu, ss.sqrt())
        })
        .collect();
    let mut out = vec![0.0; count * count];
    for i in 0..count {
        for j in 0..count {
            out[i * count + j] = if i == j {
                1.0
            } else if stats[i].1 < 1e-12 || stats[j].1 < 1e-12 {
                0.0
            } else {
                let cov: f64 = (0..m)
                    .map(|t| (values[i + t] - stats[i].0) * (values[j + t] - stats[j].0))
                    .sum();
                (cov / (stats[i].1 * stats[j].1)).clamp(-1.0, 1.0)
            };
        }
    }
    out
}

/// Block max over the forward BAGs, with three explicit loops.
fn block_max_oracle(mat: &CorrelationMatrix, ks: usize) -> Vec<f64> {
    let n = mat.size();
    let mut out = vec![f64::NEG_INFINITY; n * n];
    for i in 0..n {
        for j in 0..n {
            for a in i..(i + ks).min(n) {
                for b in j..(j + ks).min(n) {
                    out[i * n + j] = out[i * n + j].max(mat.get(a, b));
                }
            }
        }
    }
    out
}

fn random_series(seed: u64, n: usize) -> TimeSeries {
    let mut rng = RngSeed(seed).rng();
    let walk = rng.random::<bool>();
    let mut level = 0.0;
    let values = (0..n)
        .map(|_| {
            let step: f64 = rng.random_range(-1.0..1.0);
            if walk {
                level += step;
                level
            } else {
                step
            }
        })
        .collect();
    TimeSeries::new(values).unwrap()
}

fn random_correlation_matrix(size: usize, seed: u64) -> CorrelationMatrix {
    let mut rng = RngSeed(seed).rng();
    let mut data = vec![1.0; size * size];
    for i in 0..size {
        for j in i + 1..size {
            let v: f64 = rng.random_range(-1.0..=1.0);
            data[i * size + j] = v;
            data[j * size + i] = v;
        }
    }
    CorrelationMatrix::from_entries(size, 2, data).unwrap()
}

#[test]
fn fast_and_naive_match_pearson_oracle() {
    let mut rng = RngSeed(2024).rng();
    let mut worst = 0.0f64;
    for case in 0..50u64 {
        let m = rng.random_range(4..=64);
        let n = rng.random_range(m + 1..=512);
        let ts = random_series(case, n);
        let oracle = pearson_oracle(ts.values(), m);
        let fast = correlation_matrix(&ts, m, Method::Fast).unwrap();
        let naive = correlation_matrix(&ts, m, Method::Naive).unwrap();
        for ((f, nv), o) in fast.as_slice().iter().zip(naive.as_slice()).zip(&oracle) {
            worst = worst.max((f - o).abs());
            assert!((nv - o).abs() <= 1e-9, "naive {nv} vs oracle {o}");
        }
    }
    assert!(worst <= 1e-6, "fast path error {worst}");
}

#[test]
fn distance_profile_is_a_matrix_row() {
    let ts = random_series(5, 300);
    let m = 16;
    let mat = correlation_matrix(&ts, m, Method::Naive).unwrap();
    for q in [0, 17, 284] {
        let prof = distance_profile(&ts, q, m, Method::Fast).unwrap();
        for (j, (&c, d)) in prof.correlations.iter().zip(prof.distances()).enumerate() {
            assert!((c - mat.get(q, j)).abs() < 1e-9);
            let expected = (2.0 * m as f64 * (1.0 - mat.get(q, j))).max(0.0).sqrt();
            assert!((d - expected).abs() < 1e-6);
        }
    }
}

#[test]
fn corr_dist_round_trip_on_grid() {
    for m in [2usize, 10, 100] {
        let top = (4.0 * m as f64).sqrt();
        for step in 0..=10_000 {
            let d = top * step as f64 / 10_000.0;
            let back = corr_to_dist(dist_to_corr(d, m).unwrap(), m).unwrap();
            assert!((back - d).abs() <= 1e-9, "m={m} d={d} back={back}");
        }
        assert_eq!(corr_to_dist(1.0, m).unwrap(), 0.0);
        assert!((corr_to_dist(-1.0, m).unwrap() - top).abs() <= 1e-12);
    }
}

#[test]
fn memory_cap_is_a_resource_error() {
    let ts = random_series(1, 400);
    let err = correlation_matrix_capped(&ts, 10, Method::Fast, 1024).unwrap_err();
    assert!(err.is_resource());
    assert!(err.to_string().contains("stride"));
}

#[test]
fn pooling_matches_block_max_oracle_exhaustively() {
    for size in 1..=12 {
        for seed in 0..5u64 {
            let mat = random_correlation_matrix(size, seed * 100 + size as u64);
            for ks in [1, 2, 3, 5] {
                let aug = augment_matrix(&mat, ks).unwrap();
                assert_eq!(aug.as_slice(), block_max_oracle(&mat, ks).as_slice());
            }
        }
    }
}

#[test]
fn pooling_matches_oracle_on_real_correlations() {
    let ts = random_series(77, 60);
    let mat = correlation_matrix(&ts, 8, Method::Fast).unwrap();
    for ks in [1, 2, 4, 9, 53, 80] {
        let aug = augment_matrix(&mat, ks).unwrap();
        assert_eq!(aug.as_slice(), block_max_oracle(&mat, ks).as_slice());
    }
}

#[test]
fn bags_repair_phase_shifts_of_a_sinusoid() {
    let p = 40usize;
    let values: Vec<f64> = (0..800)
        .map(|t| (2.0 * std::f64::consts::PI * t as f64 / p as f64).sin())
        .collect();
    let ts = TimeSeries::new(values).unwrap();
    let mat = correlation_matrix(&ts, p, Method::Fast).unwrap();
    // Without pooling, half-period shifts are anti-correlated.
    assert!(mat.get(0, p / 2) < -0.99);
    let aug = augment_matrix(&mat, p).unwrap();
    let low = aug.as_slice().iter().copied().fold(f64::INFINITY, f64::min);
    assert!(low >= 0.99, "smallest pooled correlation {low}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn correlation_is_affine_invariant(
        seed in 0u64..1000,
        a in 0.01f64..100.0,
        b in -1000.0f64..1000.0,
        m in 4usize..24,
    ) {
        let ts = random_series(seed, 120);
        let moved = TimeSeries::new(ts.values().iter().map(|v| a * v + b).collect()).unwrap();
        let x = correlation_matrix(&ts, m, Method::Fast).unwrap();
        let y = correlation_matrix(&moved, m, Method::Fast).unwrap();
        for (p, q) in x.as_slice().iter().zip(y.as_slice()) {
            prop_assert!((p - q).abs() <= 1e-6);
        }
    }

    #[test]
    fn pooling_dominates_and_grows_with_ks(seed in 0u64..1000, ks in 1usize..12) {
        let ts = random_series(seed, 90);
        let mat = correlation_matrix(&ts, 10, Method::Fast).unwrap();
        let small = augment_matrix(&mat, ks).unwrap();
        let large = augment_matrix(&mat, ks + 1).unwrap();
        for ((m, s), l) in mat.as_slice().iter().zip(small.as_slice()).zip(large.as_slice()) {
            prop_assert!(s >= m);
            prop_assert!(l >= s);
        }
    }

    #[test]
    fn matrix_is_symmetric_with_unit_diagonal(seed in 0u64..1000, m in 3usize..30) {
        let ts = random_series(seed, 150);
        let mat = correlation_matrix(&ts, m, Method::Fast).unwrap();
        for i in 0..mat.size() {
            prop_assert_eq!(mat.get(i, i), 1.0);
            for j in 0..i {
                prop_assert_eq!(mat.get(i, j), mat.get(j, i));
                prop_assert!((-1.0..=1.0).contains(&mat.get(i, j)));
            }
        }
    }
}
