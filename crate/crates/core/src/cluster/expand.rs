use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpandedLabels {
    pub labels: Vec<usize>,
    pub confidence: Vec<f64>,
}

/// Per-timepoint labels from per-subsequence labels.
///
/// Timepoint `t` is covered by subsequences `max(0, t-m+1)..=min(t, N-1)`; it
/// takes the label with the largest summed confidence among them (lowest
/// label on ties) and the mean confidence of the covering subsequences that
/// carry that label.
pub fn expand_labels(
    labels: &[usize],
    confidence: &[f64],
    n: usize,
    m: usize,
) -> Result<ExpandedLabels> {
    if m == 0 || m > n || labels.len() != n - m + 1 {
        return Err(Error::invalid(format!(
            "{} subsequence labels do not match n = {n}, m = {m}",
            labels.len()
        )));
    }
    if confidence.len() != labels.len() {
        return Err(Error::invalid(format!(
            "{} confidences for {} labels",
            confidence.len(),
            labels.len()
        )));
    }
    let count = labels.len();
    let k = labels.iter().max().map_or(0, |&l| l + 1);
    let mut sums = vec![0.0f64; k];
    let mut hits = vec![0usize; k];
    let mut out_labels = Vec::with_capacity(n);
    let mut out_conf = Vec::with_capacity(n);
    for t in 0..n {
        sums.fill(0.0);
        hits.fill(0);
        let first = (t + 1).saturating_sub(m);
        let last = t.min(count - 1);
        for s in first..=last {
            sums[labels[s]] += confidence[s];
            hits[labels[s]] += 1;
        }
        let mut best: Option<usize> = None;
        for l in (0..k).filter(|&l| hits[l] > 0) {
            if best.is_none_or(|b| sums[l] > sums[b]) {
                best = Some(l);
            }
        }
        let winner = best.expect("every timepoint is covered by a subsequence");
        out_labels.push(winner);
        out_conf.push(sums[winner] / hits[winner] as f64);
    }
    Ok(ExpandedLabels {
        labels: out_labels,
        confidence: out_conf,
    })
}
