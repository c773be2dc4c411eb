//! Distance profiles and the all-pairs subsequence correlation matrix.
//!
//! Correlations are the Pearson coefficients between z-normalized
//! subsequences; the z-normalized Euclidean distance follows from
//! `D = sqrt(2m(1 - rho))`. The fast path computes each row as a sliding dot
//! product through one FFT convolution, the naive path evaluates every pair
//! directly and serves as the oracle.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{mean_std, TimeSeries, FLAT_EPSILON};

/// Default cap on the bytes of one `N x N` matrix.
pub const DEFAULT_MEMORY_CAP: u64 = 2 << 30;

const RANGE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Naive,
    #[default]
    Fast,
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "naive" => Ok(Method::Naive),
            "fast" => Ok(Method::Fast),
            other => Err(Error::invalid(format!(
                "unknown method '{other}', expected naive or fast"
            ))),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Naive => "naive",
            Method::Fast => "fast",
        })
    }
}

/// z-normalized Euclidean distance for a correlation `rho` at window `m`.
pub fn corr_to_dist(rho: f64, m: usize) -> Result<f64> {
    if m == 0 {
        return Err(Error::invalid("window length must be positive"));
    }
    if !(rho.is_finite() && (-1.0 - RANGE_SLACK..=1.0 + RANGE_SLACK).contains(&rho)) {
        return Err(Error::invalid(format!("correlation {rho} outside [-1, 1]")));
    }
    let rho = rho.clamp(-1.0, 1.0);
    Ok((2.0 * m as f64 * (1.0 - rho)).sqrt())
}

/// Inverse of [`corr_to_dist`].
pub fn dist_to_corr(d: f64, m: usize) -> Result<f64> {
    if m == 0 {
        return Err(Error::invalid("window length must be positive"));
    }
    let upper = (4.0 * m as f64).sqrt();
    if !(d.is_finite() && d >= 0.0 && d <= upper * (1.0 + RANGE_SLACK)) {
        return Err(Error::invalid(format!(
            "distance {d} outside [0, {upper}] for window {m}"
        )));
    }
    Ok((1.0 - d * d / (2.0 * m as f64)).clamp(-1.0, 1.0))
}

/// Correlations of one query subsequence against every subsequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceProfile {
    pub query_start: usize,
    pub m: usize,
    pub correlations: Vec<f64>,
}

impl DistanceProfile {
    /// The profile as z-normalized Euclidean distances.
    pub fn distances(&self) -> Vec<f64> {
        self.correlations
            .iter()
            .map(|&r| (2.0 * self.m as f64 * (1.0 - r)).max(0.0).sqrt())
            .collect()
    }
}

/// Row-major `N x N` matrix of subsequence correlations, `N = n - m + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    size: usize,
    m: usize,
    data: Vec<f64>,
}

impl CorrelationMatrix {
    /// Wraps raw row-major entries. Values must lie in [-1, 1] and the diagonal must be 1.
    pub fn from_entries(size: usize, m: usize, data: Vec<f64>) -> Result<Self> {
        if size == 0 || data.len() != size * size {
            return Err(Error::invalid(format!(
                "expected {size}x{size} entries, got {}",
                data.len()
            )));
        }
        if let Some(v) = data
            .iter()
            .find(|v| !(v.is_finite() && v.abs() <= 1.0 + RANGE_SLACK))
        {
            return Err(Error::invalid(format!("correlation {v} outside [-1, 1]")));
        }
        if (0..size).any(|i| (data[i * size + i] - 1.0).abs() > RANGE_SLACK) {
            return Err(Error::invalid("correlation matrix diagonal must be 1"));
        }
        let data = data.into_iter().map(|v| v.clamp(-1.0, 1.0)).collect();
        Ok(Self { size, m, data })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn m(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.size + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.size..(i + 1) * self.size]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_entries(self) -> Vec<f64> {
        self.data
    }
}

/// Bytes needed for one `size x size` matrix of `f64`.
pub fn matrix_bytes(size: usize) -> u64 {
    (size as u64)
        .saturating_mul(size as u64)
        .saturating_mul(std::mem::size_of::<f64>() as u64)
}

pub(crate) fn check_memory(size: usize, cap: u64) -> Result<()> {
    let required = matrix_bytes(size);
    if required > cap {
        return Err(Error::MemoryCap {
            size,
            required,
            cap,
        });
    }
    Ok(())
}

fn check_window(ts: &TimeSeries, m: usize) -> Result<usize> {
    if m < 2 {
        return Err(Error::invalid(format!(
            "subsequence length must be at least 2, got {m}"
        )));
    }
    ts.subsequence_count(m)
}

pub fn distance_profile(
    ts: &TimeSeries,
    query_start: usize,
    m: usize,
    method: Method,
) -> Result<DistanceProfile> {
    let count = check_window(ts, m)?;
    if query_start >= count {
        return Err(Error::invalid(format!(
            "query start {query_start} + length {m} exceeds series length {}",
            ts.len()
        )));
    }
    let mut correlations = vec![0.0; count];
    match method {
        Method::Naive => naive_row(ts.values(), m, query_start, &mut correlations),
        Method::Fast => {
            let engine = SlidingDotEngine::new(ts.values(), m);
            let mut scratch = engine.scratch();
            engine.row(query_start, &mut scratch, &mut correlations);
        }
    }
    Ok(DistanceProfile {
        query_start,
        m,
        correlations,
    })
}

/// Full correlation matrix under [`DEFAULT_MEMORY_CAP`].
pub fn correlation_matrix(ts: &TimeSeries, m: usize, method: Method) -> Result<CorrelationMatrix> {
    correlation_matrix_capped(ts, m, method, DEFAULT_MEMORY_CAP)
}

pub fn correlation_matrix_capped(
    ts: &TimeSeries,
    m: usize,
    method: Method,
    memory_cap: u64,
) -> Result<CorrelationMatrix> {
    let size = check_window(ts, m)?;
    if size < 2 {
        return Err(Error::invalid(format!(
            "need at least 2 subsequences, series of length {} has {size} for m = {m}",
            ts.len()
        )));
    }
    check_memory(size, memory_cap)?;
    let mut data = vec![0.0; size * size];
    let values = ts.values();
    match method {
        Method::Naive => {
            data.par_chunks_mut(size)
                .enumerate()
                .for_each(|(i, row)| naive_row(values, m, i, row));
        }
        Method::Fast => {
            let engine = SlidingDotEngine::new(values, m);
            data.par_chunks_mut(size).enumerate().for_each_init(
                || engine.scratch(),
                |scratch, (i, row)| engine.row(i, scratch, row),
            );
        }
    }
    mirror_upper(&mut data, size);
    Ok(CorrelationMatrix { size, m, data })
}

/// Copies the upper triangle onto the lower one so the matrix is exactly
/// symmetric. Blocked, since a plain column walk misses the TLB on every write
/// once rows span pages.
fn mirror_upper(data: &mut [f64], size: usize) {
    const BLOCK: usize = 64;
    for bi in (0..size).step_by(BLOCK) {
        for bj in (bi..size).step_by(BLOCK) {
            for i in bi..(bi + BLOCK).min(size) {
                let j_start = if bi == bj { i + 1 } else { bj };
                for j in j_start..(bj + BLOCK).min(size) {
                    data[j * size + i] = data[i * size + j];
                }
            }
        }
    }
}

/// Pearson correlation with the flat-subsequence convention.
pub(crate) fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let (ma, sa) = mean_std(a);
    let (mb, sb) = mean_std(b);
    if sa < FLAT_EPSILON || sb < FLAT_EPSILON {
        return 0.0;
    }
    let cov = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - ma) * (y - mb))
        .sum::<f64>()
        / a.len() as f64;
    (cov / (sa * sb)).clamp(-1.0, 1.0)
}

fn naive_row(values: &[f64], m: usize, query: usize, out: &mut [f64]) {
    let q = &values[query..query + m];
    for (j, slot) in out.iter_mut().enumerate() {
        *slot = if j == query {
            1.0
        } else {
            pearson(q, &values[j..j + m])
        };
    }
}

/// Precomputed spectrum and window statistics for FFT sliding dot products.
struct SlidingDotEngine {
    m: usize,
    len: usize,
    centered: Vec<f64>,
    means: Vec<f64>,
    stds: Vec<f64>,
    spectrum: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

struct RowScratch {
    buffer: Vec<Complex64>,
    fft: Vec<Complex64>,
}

impl SlidingDotEngine {
    fn new(values: &[f64], m: usize) -> Self {
        let n = values.len();
        // Centering the whole series keeps the transform well conditioned for
        // large offsets; correlations are unaffected.
        let (mu, _) = mean_std(values);
        let centered: Vec<f64> = values.iter().map(|v| v - mu).collect();
        let (means, stds): (Vec<f64>, Vec<f64>) = centered.windows(m).map(mean_std).unzip();

        // Only lags whose window lies fully inside the series are read back, so
        // a transform of length >= n cannot alias them.
        let len = n.next_power_of_two();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(len);
        let inverse = planner.plan_fft_inverse(len);
        let mut spectrum: Vec<Complex64> = centered
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .chain(std::iter::repeat(Complex64::new(0.0, 0.0)))
            .take(len)
            .collect();
        forward.process(&mut spectrum);
        Self {
            m,
            len,
            centered,
            means,
            stds,
            spectrum,
            forward,
            inverse,
        }
    }

    fn scratch(&self) -> RowScratch {
        let scratch_len = self
            .forward
            .get_inplace_scratch_len()
            .max(self.inverse.get_inplace_scratch_len());
        RowScratch {
            buffer: vec![Complex64::new(0.0, 0.0); self.len],
            fft: vec![Complex64::new(0.0, 0.0); scratch_len],
        }
    }

    fn row(&self, query: usize, scratch: &mut RowScratch, out: &mut [f64]) {
        let m = self.m;
        let q_std = self.stds[query];
        if q_std < FLAT_EPSILON {
            out.fill(0.0);
            out[query] = 1.0;
            return;
        }
        let q_mean = self.means[query];
        let query_values = &self.centered[query..query + m];

        // With a zero-mean query, the dot product against any window equals its
        // covariance numerator, so no mean correction is needed afterwards.
        let buffer = &mut scratch.buffer;
        buffer.fill(Complex64::new(0.0, 0.0));
        for (k, &v) in query_values.iter().enumerate() {
            buffer[m - 1 - k] = Complex64::new((v - q_mean) / q_std, 0.0);
        }
        self.forward.process_with_scratch(buffer, &mut scratch.fft);
        for (b, s) in buffer.iter_mut().zip(&self.spectrum) {
            *b *= *s;
        }
        self.inverse.process_with_scratch(buffer, &mut scratch.fft);

        let scale = 1.0 / (self.len as f64 * m as f64);
        for (j, slot) in out.iter_mut().enumerate() {
            let sd = self.stds[j];
            *slot = if sd < FLAT_EPSILON {
                0.0
            } else {
                (buffer[m - 1 + j].re * scale / sd).clamp(-1.0, 1.0)
            };
        }
        out[query] = 1.0;
    }
}
