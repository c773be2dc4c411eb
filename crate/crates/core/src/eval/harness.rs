use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cluster::{expand_labels, kmeans_rows, ClusterResult, KMeansConfig, Time2Cluster};
use crate::error::{Error, Result};
use crate::eval::metrics::{evaluate, MetricsReport};
use crate::series::{mean_std, znorm, RngSeed, TimeSeries};

/// Spike height in units of the series standard deviation.
pub const DEFAULT_SPIKE_MAGNITUDE: f64 = 5.0;
const MAX_SPIKE_FRACTION: f64 = 0.2;

/// Replaces `floor(fraction * n)` distinct, uniformly chosen points with
/// `mean +/- magnitude * std` (random sign).
pub fn inject_spikes(
    ts: &TimeSeries,
    fraction: f64,
    magnitude: f64,
    seed: RngSeed,
) -> Result<TimeSeries> {
    if !(0.0..=MAX_SPIKE_FRACTION).contains(&fraction) {
        return Err(Error::invalid(format!(
            "spike fraction {fraction} outside [0, {MAX_SPIKE_FRACTION}]"
        )));
    }
    if !magnitude.is_finite() {
        return Err(Error::invalid("spike magnitude must be finite"));
    }
    let n = ts.len();
    let count = (fraction * n as f64).floor() as usize;
    let (mean, std) = (ts.mean(), ts.std());
    let mut values = ts.values().to_vec();
    let mut rng = seed.rng();
    for idx in rand::seq::index::sample(&mut rng, n, count).into_vec() {
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        values[idx] = mean + sign * magnitude * std;
    }
    let mut out = TimeSeries::new(values)?;
    if let Some(name) = ts.name() {
        out = out.with_name(name);
    }
    Ok(out)
}

/// Metrics of a clustering against per-timepoint ground truth, after
/// expanding subsequence labels to timepoints. Missing confidences count as 1.
pub fn evaluate_run(
    result: &ClusterResult,
    n: usize,
    m: usize,
    truth: &[usize],
) -> Result<MetricsReport> {
    let ones;
    let confidence = if result.confidence.is_empty() {
        ones = vec![1.0; result.labels.len()];
        &ones
    } else {
        &result.confidence
    };
    let expanded = expand_labels(&result.labels, confidence, n, m)?;
    evaluate(truth, &expanded.labels)
}

/// kmeans++ directly on z-normalized raw subsequences (stride 1).
pub fn baseline_euclidean_kmeans(
    ts: &TimeSeries,
    m: usize,
    cfg: &KMeansConfig,
) -> Result<ClusterResult> {
    if m < 2 {
        return Err(Error::invalid("subsequence length must be at least 2"));
    }
    ts.subsequence_count(m)?;
    let mut flat = Vec::with_capacity((ts.len() - m + 1) * m);
    for window in ts.values().windows(m) {
        flat.extend(znorm(window)?);
    }
    kmeans_rows(&flat, m, cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobustnessRow {
    pub fraction: f64,
    pub mean_macro_f1: f64,
    pub std_macro_f1: f64,
    pub repeats: usize,
}

/// Macro-F1 under increasing spike contamination, averaged over `repeats`
/// injections per fraction. Clustering keeps the pipeline seed, so the
/// zero-fraction row is exactly the clean run.
pub fn robustness_sweep(
    ts: &TimeSeries,
    truth: &[usize],
    pipeline: &Time2Cluster,
    fractions: &[f64],
    repeats: usize,
    magnitude: f64,
    seed: RngSeed,
) -> Result<Vec<RobustnessRow>> {
    if repeats == 0 {
        return Err(Error::invalid("repeats must be at least 1"));
    }
    check_truth(ts, truth)?;
    let score = |series: &TimeSeries| -> Result<f64> {
        let run = pipeline.run(series)?;
        Ok(evaluate_run(&run.result, series.len(), pipeline.m, truth)?.macro_f1)
    };
    let mut clean = None;
    fractions
        .iter()
        .enumerate()
        .map(|(fi, &fraction)| {
            let (mean, std) = if (fraction * ts.len() as f64).floor() == 0.0 {
                if clean.is_none() {
                    // Validates the fraction even though nothing is replaced.
                    inject_spikes(ts, fraction, magnitude, seed)?;
                    clean = Some(score(ts)?);
                }
                (clean.expect("computed above"), 0.0)
            } else {
                let fseed = seed.child(fi as u64);
                let scores = (0..repeats)
                    .map(|r| {
                        score(&inject_spikes(
                            ts,
                            fraction,
                            magnitude,
                            fseed.child(r as u64),
                        )?)
                    })
                    .collect::<Result<Vec<f64>>>()?;
                mean_std(&scores)
            };
            Ok(RobustnessRow {
                fraction,
                mean_macro_f1: mean,
                std_macro_f1: std,
                repeats,
            })
        })
        .collect()
}

/// How the kernel size follows the window in a sensitivity sweep.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub enum KsRule {
    #[default]
    SameAsWindow,
    Scaled(f64),
    Fixed(usize),
}

impl KsRule {
    pub fn kernel_for(&self, m: usize) -> usize {
        match *self {
            KsRule::SameAsWindow => m,
            KsRule::Scaled(f) => ((m as f64 * f).round() as usize).max(1),
            KsRule::Fixed(ks) => ks.max(1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivityRow {
    pub m: usize,
    pub ks: usize,
    pub macro_f1: f64,
    pub ari: f64,
}

/// Re-runs the pipeline for every window in `m_values`.
pub fn sensitivity_sweep(
    ts: &TimeSeries,
    truth: &[usize],
    m_values: &[usize],
    ks_rule: KsRule,
    template: &Time2Cluster,
) -> Result<Vec<SensitivityRow>> {
    check_truth(ts, truth)?;
    m_values
        .iter()
        .map(|&m| {
            let ks = ks_rule.kernel_for(m);
            let pipeline = Time2Cluster { m, ks, ..*template };
            let run = pipeline.run(ts)?;
            let report = evaluate_run(&run.result, ts.len(), m, truth)?;
            Ok(SensitivityRow {
                m,
                ks,
                macro_f1: report.macro_f1,
                ari: report.ari,
            })
        })
        .collect()
}

fn check_truth(ts: &TimeSeries, truth: &[usize]) -> Result<()> {
    if truth.len() != ts.len() {
        return Err(Error::invalid(format!(
            "{} ground-truth labels for a series of length {}",
            truth.len(),
            ts.len()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(n: usize) -> TimeSeries {
        TimeSeries::new((0..n).map(|i| (i as f64 * 0.37).sin()).collect()).unwrap()
    }

    #[test]
    fn zero_fraction_is_identity() {
        let ts = ramp(500);
        let out = inject_spikes(&ts, 0.0, 5.0, RngSeed(1)).unwrap();
        assert_eq!(out, ts);
    }

    #[test]
    fn spike_count_and_determinism() {
        let ts = ramp(10_000);
        let a = inject_spikes(&ts, 0.01, 5.0, RngSeed(4)).unwrap();
        let b = inject_spikes(&ts, 0.01, 5.0, RngSeed(4)).unwrap();
        assert_eq!(a, b);
        let changed = a
            .values()
            .iter()
            .zip(ts.values())
            .filter(|(x, y)| x != y)
            .count();
        assert_eq!(changed, 100);
        let (mu, sd) = (ts.mean(), ts.std());
        for (x, y) in a.values().iter().zip(ts.values()) {
            if x != y {
                assert!(((x - mu).abs() - 5.0 * sd).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn spike_fraction_bounds() {
        let ts = ramp(100);
        assert!(inject_spikes(&ts, 0.21, 5.0, RngSeed(0)).is_err());
        assert!(inject_spikes(&ts, -0.1, 5.0, RngSeed(0)).is_err());
    }

    #[test]
    fn ks_rules() {
        assert_eq!(KsRule::SameAsWindow.kernel_for(40), 40);
        assert_eq!(KsRule::Scaled(0.5).kernel_for(41), 21);
        assert_eq!(KsRule::Fixed(7).kernel_for(40), 7);
    }

    #[test]
    fn baseline_is_deterministic() {
        let ts = ramp(300);
        let cfg = KMeansConfig::new(2).with_seed(8);
        let a = baseline_euclidean_kmeans(&ts, 20, &cfg).unwrap();
        let b = baseline_euclidean_kmeans(&ts, 20, &cfg).unwrap();
        assert_eq!(a.labels, b.labels);
        assert_eq!(a.labels.len(), 281);
        assert!(baseline_euclidean_kmeans(&ts, 1, &cfg).is_err());
    }
}
