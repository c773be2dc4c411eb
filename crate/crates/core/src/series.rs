//! Time-series container, subsequence extraction, z-normalization and the
//! seeding contract shared by every stochastic operation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Standard deviations below this are treated as flat.
pub const FLAT_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    values: Vec<f64>,
    name: Option<String>,
    sample_rate_hz: Option<f64>,
}

impl TimeSeries {
    /// Builds a series, rejecting empty input and non-finite values.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid(
                "time series must contain at least one value",
            ));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite value {} at index {pos}",
                values[pos]
            )));
        }
        Ok(Self {
            values,
            name: None,
            sample_rate_hz: None,
        })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn with_sample_rate(mut self, hz: f64) -> Result<Self> {
        if !(hz.is_finite() && hz > 0.0) {
            return Err(Error::invalid(format!(
                "sample rate must be positive, got {hz}"
            )));
        }
        self.sample_rate_hz = Some(hz);
        Ok(self)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn sample_rate_hz(&self) -> Option<f64> {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        mean(&self.values)
    }

    /// Population standard deviation.
    pub fn std(&self) -> f64 {
        mean_std(&self.values).1
    }

    /// Number of length-`m` subsequences at stride 1, or an error if `m` does not fit.
    pub fn subsequence_count(&self, m: usize) -> Result<usize> {
        if m == 0 {
            return Err(Error::invalid("subsequence length must be at least 1"));
        }
        if m > self.len() {
            return Err(Error::InvalidWindow { m, n: self.len() });
        }
        Ok(self.len() - m + 1)
    }

    /// Keeps every `factor`-th point.
    pub fn downsample(&self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::invalid("downsampling factor must be at least 1"));
        }
        Ok(Self {
            values: self.values.iter().step_by(factor).copied().collect(),
            name: self.name.clone(),
            sample_rate_hz: self.sample_rate_hz.map(|hz| hz / factor as f64),
        })
    }
}

/// A subsequence `T[start..start + length]`; `stride` is the step used to enumerate it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsequenceSpec {
    pub start: usize,
    pub length: usize,
    pub stride: usize,
}

impl SubsequenceSpec {
    pub fn slice<'a>(&self, ts: &'a TimeSeries) -> &'a [f64] {
        &ts.values()[self.start..self.start + self.length]
    }
}

/// Subsequences of length `m` starting at `0, stride, 2*stride, ...`.
pub fn extract_subsequences(
    ts: &TimeSeries,
    m: usize,
    stride: usize,
) -> Result<Vec<SubsequenceSpec>> {
    if stride == 0 {
        return Err(Error::invalid("stride must be at least 1"));
    }
    let n = ts.len();
    if m == 0 {
        return Err(Error::invalid("subsequence length must be at least 1"));
    }
    if m > n {
        return Err(Error::InvalidWindow { m, n });
    }
    Ok((0..=n - m)
        .step_by(stride)
        .map(|start| SubsequenceSpec {
            start,
            length: m,
            stride,
        })
        .collect())
}

/// Z-normalizes with the population standard deviation. Flat input maps to zeros.
pub fn znorm(values: &[f64]) -> Result<Vec<f64>> {
    if values.len() < 2 {
        return Err(Error::invalid(format!(
            "z-normalization needs at least 2 values, got {}",
            values.len()
        )));
    }
    let (mu, sigma) = mean_std(values);
    if sigma < FLAT_EPSILON {
        return Ok(vec![0.0; values.len()]);
    }
    Ok(values.iter().map(|v| (v - mu) / sigma).collect())
}

pub(crate) fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Two-pass mean and population standard deviation.
pub(crate) fn mean_std(values: &[f64]) -> (f64, f64) {
    let mu = mean(values);
    let var = values.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / values.len() as f64;
    (mu, var.sqrt())
}

/// Seed for every stochastic operation. Equal seeds give bit-identical results.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct RngSeed(pub u64);

impl RngSeed {
    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }

    /// Independent seed for the `index`-th sub-task, so parallel work never
    /// depends on scheduling order.
    pub fn child(self, index: u64) -> RngSeed {
        RngSeed(splitmix64(
            self.0 ^ splitmix64(index.wrapping_add(0x9E37_79B9_7F4A_7C15)),
        ))
    }
}

impl From<u64> for RngSeed {
    fn from(seed: u64) -> Self {
        RngSeed(seed)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn series(n: usize) -> TimeSeries {
        TimeSeries::new((0..n).map(|i| i as f64).collect()).unwrap()
    }

    fn starts(specs: &[SubsequenceSpec]) -> Vec<usize> {
        specs.iter().map(|s| s.start).collect()
    }

    #[test]
    fn whole_series_is_one_subsequence() {
        let specs = extract_subsequences(&series(10), 10, 1).unwrap();
        assert_eq!(starts(&specs), vec![0]);
    }

    #[test]
    fn stride_one_gives_n_minus_m_plus_one() {
        let specs = extract_subsequences(&series(10), 3, 1).unwrap();
        assert_eq!(starts(&specs), (0..8).collect::<Vec<_>>());
    }

    #[test]
    fn strided_starts_match_enumeration() {
        // brute force: every start s with s % stride == 0 and s + m <= n
        let (n, m, stride) = (10, 3, 4);
        let expected: Vec<usize> = (0..n).filter(|s| s % stride == 0 && s + m <= n).collect();
        let specs = extract_subsequences(&series(n), m, stride).unwrap();
        assert_eq!(starts(&specs), expected);
        assert_eq!(expected, vec![0, 4]);
        assert_eq!(specs.len(), (n - m) / stride + 1);
    }

    #[test]
    fn extraction_errors() {
        assert!(matches!(
            extract_subsequences(&series(5), 6, 1),
            Err(Error::InvalidWindow { m: 6, n: 5 })
        ));
        assert!(matches!(
            extract_subsequences(&series(5), 2, 0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn rejects_non_finite_and_empty() {
        assert!(TimeSeries::new(vec![]).is_err());
        assert!(TimeSeries::new(vec![1.0, f64::NAN]).is_err());
        assert!(TimeSeries::new(vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn znorm_of_one_two_three() {
        let z = znorm(&[1.0, 2.0, 3.0]).unwrap();
        let s = 1.5f64.sqrt();
        for (a, b) in z.iter().zip([-s, 0.0, s]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn znorm_flat_and_short() {
        assert_eq!(znorm(&[5.0; 4]).unwrap(), vec![0.0; 4]);
        assert!(znorm(&[1.0]).is_err());
    }

    #[test]
    fn child_seeds_are_distinct_and_stable() {
        let s = RngSeed(7);
        assert_eq!(s.child(3), s.child(3));
        assert_ne!(s.child(3), s.child(4));
        let a: f64 = s.rng().random();
        let b: f64 = s.rng().random();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    proptest! {
        #[test]
        fn znorm_moments_and_idempotence(values in prop::collection::vec(-1e3f64..1e3, 2..64)) {
            let z = znorm(&values).unwrap();
            let sigma = mean_std(&values).1;
            if sigma >= FLAT_EPSILON * 1e3 {
                let (zm, zs) = mean_std(&z);
                prop_assert!(zm.abs() < 1e-9);
                prop_assert!((zs - 1.0).abs() < 1e-9);
                let zz = znorm(&z).unwrap();
                for (a, b) in z.iter().zip(&zz) {
                    prop_assert!((a - b).abs() < 1e-9);
                }
            }
        }

        #[test]
        fn znorm_affine_invariance(
            values in prop::collection::vec(-100f64..100.0, 2..64),
            a in prop_oneof![-50f64..-0.1, 0.1f64..50.0],
            b in -100f64..100.0,
        ) {
            prop_assume!(mean_std(&values).1 > 1e-3);
            let z = znorm(&values).unwrap();
            let shifted: Vec<f64> = values.iter().map(|v| a * v + b).collect();
            let zt = znorm(&shifted).unwrap();
            for (x, y) in z.iter().zip(&zt) {
                prop_assert!((a.signum() * x - y).abs() < 1e-9);
            }
        }
    }
}
