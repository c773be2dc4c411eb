//! Deterministic labelled synthetic series: periodic behaviors with drifting
//! phase, noise segments and regime changes.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::LabelVector;
use crate::series::{RngSeed, TimeSeries};

/// Nominal sampling rate of the canned scenarios.
pub const SCENARIO_SAMPLE_RATE_HZ: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentKind {
    Sinusoid { period: f64 },
    RandomWalk,
    WhiteNoise,
    Constant,
}

/// One labelled stretch of a generated series.
///
/// * sinusoid: `offset + amplitude * sin(2 pi t / period + phase(t))`, where
///   the phase drifts as a Gaussian random walk whose spread after one
///   period is `phase_jitter` radians;
/// * random walk: cumulative Gaussian steps with std `amplitude`;
/// * white noise: Gaussian with std `amplitude`;
/// * constant: `offset + amplitude`.
///
/// Independent Gaussian noise with std `noise_std` is added to every kind.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentSpec {
    pub kind: SegmentKind,
    pub length: usize,
    pub amplitude: f64,
    pub offset: f64,
    pub phase_jitter: f64,
    pub noise_std: f64,
    pub label: usize,
}

impl SegmentSpec {
    fn base(kind: SegmentKind, length: usize, amplitude: f64) -> Self {
        Self {
            kind,
            length,
            amplitude,
            offset: 0.0,
            phase_jitter: 0.0,
            noise_std: 0.0,
            label: 0,
        }
    }

    pub fn sinusoid(length: usize, period: f64, amplitude: f64) -> Self {
        Self::base(SegmentKind::Sinusoid { period }, length, amplitude)
    }

    pub fn random_walk(length: usize, step_std: f64) -> Self {
        Self::base(SegmentKind::RandomWalk, length, step_std)
    }

    pub fn white_noise(length: usize, std: f64) -> Self {
        Self::base(SegmentKind::WhiteNoise, length, std)
    }

    pub fn constant(length: usize, level: f64) -> Self {
        Self::base(SegmentKind::Constant, length, level)
    }

    pub fn with_label(mut self, label: usize) -> Self {
        self.label = label;
        self
    }

    pub fn with_jitter(mut self, radians_per_cycle: f64) -> Self {
        self.phase_jitter = radians_per_cycle;
        self
    }

    pub fn with_noise(mut self, std: f64) -> Self {
        self.noise_std = std;
        self
    }

    pub fn with_offset(mut self, offset: f64) -> Self {
        self.offset = offset;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.length == 0 {
            return Err(Error::invalid("segment length must be at least 1"));
        }
        if let SegmentKind::Sinusoid { period } = self.kind {
            if !(period.is_finite() && period > 0.0) {
                return Err(Error::invalid(format!(
                    "sinusoid period must be positive, got {period}"
                )));
            }
        }
        let nonneg = |v: f64| v.is_finite() && v >= 0.0;
        if !self.amplitude.is_finite() || !self.offset.is_finite() {
            return Err(Error::invalid(
                "segment amplitude and offset must be finite",
            ));
        }
        if !nonneg(self.phase_jitter) || !nonneg(self.noise_std) {
            return Err(Error::invalid(
                "phase jitter and noise std must be nonnegative",
            ));
        }
        Ok(())
    }

    fn render(&self, rng: &mut impl Rng, out: &mut Vec<f64>) {
        let mut normal = || rng.sample::<f64, _>(StandardNormal);
        match self.kind {
            SegmentKind::Sinusoid { period } => {
                let step_std = self.phase_jitter / period.sqrt();
                let mut phase = 0.0;
                for t in 0..self.length {
                    let v = self.amplitude * (2.0 * PI * t as f64 / period + phase).sin();
                    out.push(self.offset + v + self.noise_std * normal());
                    phase += step_std * normal();
                }
            }
            SegmentKind::RandomWalk => {
                let mut level = 0.0;
                for _ in 0..self.length {
                    level += self.amplitude * normal();
                    out.push(self.offset + level + self.noise_std * normal());
                }
            }
            SegmentKind::WhiteNoise => {
                for _ in 0..self.length {
                    let v = self.amplitude * normal() + self.noise_std * normal();
                    out.push(self.offset + v);
                }
            }
            SegmentKind::Constant => {
                for _ in 0..self.length {
                    out.push(self.offset + self.amplitude + self.noise_std * normal());
                }
            }
        }
    }
}

/// Concatenates the segments; labels align 1:1 with the points.
pub fn generate(segments: &[SegmentSpec], seed: RngSeed) -> Result<(TimeSeries, LabelVector)> {
    if segments.is_empty() {
        return Err(Error::invalid("at least one segment is required"));
    }
    for seg in segments {
        seg.validate()?;
    }
    let total: usize = segments.iter().map(|s| s.length).sum();
    if total < 2 {
        return Err(Error::invalid(
            "generated series must have at least 2 points",
        ));
    }
    let mut rng = seed.rng();
    let mut values = Vec::with_capacity(total);
    let mut labels = Vec::with_capacity(total);
    for seg in segments {
        seg.render(&mut rng, &mut values);
        labels.extend(std::iter::repeat_n(seg.label, seg.length));
    }
    Ok((TimeSeries::new(values)?, LabelVector::new(labels)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioName {
    WalkRun,
    WalkRunPlay,
    Stairs,
    Tilt,
    NoiseTail,
}

impl ScenarioName {
    pub const ALL: [ScenarioName; 5] = [
        ScenarioName::WalkRun,
        ScenarioName::WalkRunPlay,
        ScenarioName::Stairs,
        ScenarioName::Tilt,
        ScenarioName::NoiseTail,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ScenarioName::WalkRun => "walkrun",
            ScenarioName::WalkRunPlay => "walkrunplay",
            ScenarioName::Stairs => "stairs",
            ScenarioName::Tilt => "tilt",
            ScenarioName::NoiseTail => "noisetail",
        }
    }
}

impl fmt::Display for ScenarioName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScenarioName::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| {
                Error::invalid(format!(
                    "unknown scenario '{s}', expected one of walkrun, walkrunplay, stairs, tilt, noisetail"
                ))
            })
    }
}

/// A generated series with its ground truth and recommended parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: ScenarioName,
    pub series: TimeSeries,
    pub truth: LabelVector,
    pub m: usize,
    pub ks: usize,
    pub k: usize,
    /// The generating segments, in order.
    pub segments: Vec<SegmentSpec>,
}

/// Periods in samples at the nominal 100 Hz.
pub const WALK_PERIOD: f64 = 200.0;
pub const RUN_PERIOD: f64 = 90.0;
pub const PLAY_PERIOD: f64 = 50.0;
pub const STAIRS_PERIOD: f64 = 130.0;

fn walk(length: usize) -> SegmentSpec {
    SegmentSpec::sinusoid(length, WALK_PERIOD, 1.0)
        .with_jitter(0.3)
        .with_noise(0.15)
}

fn run(length: usize) -> SegmentSpec {
    SegmentSpec::sinusoid(length, RUN_PERIOD, 1.4)
        .with_jitter(0.3)
        .with_noise(0.15)
}

/// Segment lists of the named scenarios:
///
/// * `walkrun`: walking (period 200) then running (period 90), 2000 points each, K = 2;
/// * `walkrunplay`: walking, running, then irregular fast play (period 50, strong
///   jitter and noise), 1500 points each, K = 3;
/// * `stairs`: walking, stair climbing (period 130), walking again, K = 2 with the
///   first behavior recurring;
/// * `tilt`: a pressure-like periodic signal (period 80 around 100) that switches to
///   a faster, lower regime (period 55 around 85), with a flat 150-point calibration
///   gap inside the first regime, K = 2;
/// * `noisetail`: walking, running, then 1000 points of white noise (label 2), K = 2.
pub fn scenario_segments(name: ScenarioName) -> (Vec<SegmentSpec>, usize, usize, usize) {
    match name {
        ScenarioName::WalkRun => (vec![walk(2000), run(2000).with_label(1)], 200, 200, 2),
        ScenarioName::WalkRunPlay => (
            vec![
                walk(1500),
                run(1500).with_label(1),
                SegmentSpec::sinusoid(1500, PLAY_PERIOD, 1.2)
                    .with_jitter(0.6)
                    .with_noise(0.3)
                    .with_label(2),
            ],
            200,
            200,
            3,
        ),
        ScenarioName::Stairs => (
            vec![
                walk(1500),
                SegmentSpec::sinusoid(1500, STAIRS_PERIOD, 1.2)
                    .with_jitter(0.3)
                    .with_noise(0.15)
                    .with_label(1),
                walk(1500),
            ],
            200,
            200,
            2,
        ),
        ScenarioName::Tilt => {
            let supine = |len| {
                SegmentSpec::sinusoid(len, 80.0, 20.0)
                    .with_offset(100.0)
                    .with_jitter(0.2)
                    .with_noise(1.0)
            };
            (
                vec![
                    supine(1500),
                    SegmentSpec::constant(150, 100.0),
                    supine(1000),
                    SegmentSpec::sinusoid(2500, 55.0, 12.0)
                        .with_offset(85.0)
                        .with_jitter(0.2)
                        .with_noise(1.0)
                        .with_label(1),
                ],
                80,
                80,
                2,
            )
        }
        ScenarioName::NoiseTail => (
            vec![
                walk(1500),
                run(1500).with_label(1),
                SegmentSpec::white_noise(1000, 1.0).with_label(2),
            ],
            200,
            200,
            2,
        ),
    }
}

pub fn scenario(name: ScenarioName, seed: RngSeed) -> Result<Scenario> {
    let (segments, m, ks, k) = scenario_segments(name);
    let (series, truth) = generate(&segments, seed)?;
    let series = series
        .with_name(name.as_str())
        .with_sample_rate(SCENARIO_SAMPLE_RATE_HZ)?;
    Ok(Scenario {
        name,
        series,
        truth,
        m,
        ks,
        k,
        segments,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clean_sinusoid_is_exact() {
        let seg = SegmentSpec::sinusoid(500, 25.0, 2.0);
        let (ts, labels) = generate(&[seg], RngSeed(3)).unwrap();
        for (t, v) in ts.values().iter().enumerate() {
            assert_eq!(*v, 2.0 * (2.0 * PI * t as f64 / 25.0).sin());
        }
        assert_eq!(labels.labels, vec![0; 500]);
    }

    #[test]
    fn label_counts_follow_lengths() {
        let segs = [
            SegmentSpec::sinusoid(2000, 50.0, 1.0),
            SegmentSpec::sinusoid(2000, 25.0, 1.0).with_label(1),
        ];
        let (ts, labels) = generate(&segs, RngSeed(1)).unwrap();
        assert_eq!(ts.len(), 4000);
        assert_eq!(labels.counts(), vec![2000, 2000]);
    }

    #[test]
    fn same_seed_same_series() {
        for name in ScenarioName::ALL {
            let a = scenario(name, RngSeed(9)).unwrap();
            let b = scenario(name, RngSeed(9)).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.series.len(), a.truth.len());
            let c = scenario(name, RngSeed(10)).unwrap();
            assert_ne!(a.series, c.series);
        }
    }

    #[test]
    fn scenario_names_round_trip() {
        for name in ScenarioName::ALL {
            assert_eq!(name.as_str().parse::<ScenarioName>().unwrap(), name);
        }
        assert!("jogging".parse::<ScenarioName>().is_err());
    }

    #[test]
    fn invalid_specs() {
        assert!(generate(&[], RngSeed(0)).is_err());
        assert!(generate(&[SegmentSpec::constant(1, 1.0)], RngSeed(0)).is_err());
        assert!(generate(&[SegmentSpec::sinusoid(10, 0.0, 1.0)], RngSeed(0)).is_err());
        assert!(generate(&[SegmentSpec::white_noise(0, 1.0)], RngSeed(0)).is_err());
        assert!(generate(
            &[SegmentSpec::white_noise(10, 1.0).with_noise(-1.0)],
            RngSeed(0)
        )
        .is_err());
    }

    #[test]
    fn walkrun_parameters() {
        let sc = scenario(ScenarioName::WalkRun, RngSeed(0)).unwrap();
        assert_eq!((sc.m, sc.ks, sc.k), (200, 200, 2));
        assert_eq!(sc.truth.counts(), vec![2000, 2000]);
        assert_eq!(sc.series.sample_rate_hz(), Some(100.0));
    }
}
