//! BAG correlations: the correlation matrix max-pooled over `ks x ks` blocks.
//!
//! A BAG is the run of `ks` consecutive subsequences starting at `i`,
//! truncated at the end of the series. The correlation of two BAGs is the
//! largest correlation between any of their members, so two BAGs holding the
//! same behavior at different phases still correlate highly. Pooling uses
//! stride 1, keeping one row per subsequence.

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::CorrelationMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BagSpec {
    pub start: usize,
    pub m: usize,
    pub ks: usize,
    pub effective_ks: usize,
}

impl BagSpec {
    /// BAG at `start` among `count` subsequences.
    pub fn new(start: usize, m: usize, ks: usize, count: usize) -> Result<Self> {
        if ks == 0 {
            return Err(Error::invalid("kernel size must be at least 1"));
        }
        if start >= count {
            return Err(Error::invalid(format!(
                "BAG start {start} out of range for {count} subsequences"
            )));
        }
        Ok(Self {
            start,
            m,
            ks,
            effective_ks: ks.min(count - start),
        })
    }

    /// Start indices of the member subsequences.
    pub fn members(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.effective_ks
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedCorrelationMatrix {
    size: usize,
    m: usize,
    ks: usize,
    data: Vec<f64>,
}

impl AugmentedCorrelationMatrix {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn ks(&self) -> usize {
        self.ks
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.size + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.size..(i + 1) * self.size]
    }

    /// Row-major entries; row `i` is the feature vector of subsequence `i`.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Wraps raw row-major entries, e.g. a matrix built elsewhere.
    pub fn from_entries(size: usize, m: usize, ks: usize, data: Vec<f64>) -> Result<Self> {
        if size == 0 || data.len() != size * size {
            return Err(Error::invalid(format!(
                "expected {size}x{size} entries, got {}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("augmented matrix entries must be finite"));
        }
        Ok(Self { size, m, ks, data })
    }
}

/// Max of `M[i + a][j + b]` over the members of both BAGs.
pub fn bag_correlation(mat: &CorrelationMatrix, i: usize, j: usize, ks: usize) -> Result<f64> {
    let size = mat.size();
    if i >= size || j >= size {
        return Err(Error::invalid(format!(
            "BAG indices ({i}, {j}) out of range for size {size}"
        )));
    }
    let bi = BagSpec::new(i, mat.m(), ks, size)?;
    let bj = BagSpec::new(j, mat.m(), ks, size)?;
    Ok(bi
        .members()
        .flat_map(|a| bj.members().map(move |b| mat.get(a, b)))
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Augmented matrix `A[i][j] = bag_correlation(M, i, j, ks)` for all pairs.
///
/// Separable: a forward sliding maximum along rows, then along columns, each
/// with a monotonic deque, so the cost is O(N^2) independent of `ks`.
pub fn augment_matrix(mat: &CorrelationMatrix, ks: usize) -> Result<AugmentedCorrelationMatrix> {
    pool(mat.as_slice().to_vec(), mat.size(), mat.m(), ks)
}

/// As [`augment_matrix`], reusing the correlation matrix storage.
pub fn augment_owned(mat: CorrelationMatrix, ks: usize) -> Result<AugmentedCorrelationMatrix> {
    let (size, m) = (mat.size(), mat.m());
    pool(mat.into_entries(), size, m, ks)
}

fn pool(
    mut data: Vec<f64>,
    size: usize,
    m: usize,
    ks: usize,
) -> Result<AugmentedCorrelationMatrix> {
    if ks == 0 {
        return Err(Error::invalid("kernel size must be at least 1"));
    }
    if ks > 1 {
        rows_forward_max(&mut data, size, ks);
        transpose_in_place(&mut data, size);
        rows_forward_max(&mut data, size, ks);
        transpose_in_place(&mut data, size);
    }
    Ok(AugmentedCorrelationMatrix { size, m, ks, data })
}

fn rows_forward_max(data: &mut [f64], size: usize, ks: usize) {
    data.par_chunks_mut(size).for_each_init(
        || VecDeque::with_capacity(ks + 1),
        |deque, row| forward_window_max(row, ks, deque),
    );
}

/// In place: `row[j] = max(row[j..min(j + ks, len)])`.
///
/// Scans right to left; the deque holds (index, value) pairs with strictly
/// decreasing values from front to back, so the front is the window maximum.
/// Values are copied into the deque because their slots get overwritten.
pub(crate) fn forward_window_max(row: &mut [f64], ks: usize, deque: &mut VecDeque<(usize, f64)>) {
    deque.clear();
    for j in (0..row.len()).rev() {
        let v = row[j];
        while deque.back().is_some_and(|&(_, b)| b <= v) {
            deque.pop_back();
        }
        deque.push_back((j, v));
        while deque.front().is_some_and(|&(idx, _)| idx >= j + ks) {
            deque.pop_front();
        }
        row[j] = deque.front().map_or(v, |&(_, best)| best);
    }
}

fn transpose_in_place(data: &mut [f64], size: usize) {
    const BLOCK: usize = 64;
    for bi in (0..size).step_by(BLOCK) {
        for bj in (bi..size).step_by(BLOCK) {
            for i in bi..(bi + BLOCK).min(size) {
                let j_start = if bi == bj { i + 1 } else { bj };
                for j in j_start..(bj + BLOCK).min(size) {
                    data.swap(i * size + j, j * size + i);
                }
            }
        }
    }
}
