use serde::{Deserialize, Serialize};

use crate::augment::AugmentedCorrelationMatrix;
use crate::error::{Error, Result};

/// Indices `j` with `exclusion <= |i - j| < exclusion + radius` count as
/// neighbors of `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfidenceNeighborhood {
    pub radius: usize,
    pub exclusion: usize,
}

impl ConfidenceNeighborhood {
    /// The `radius` nearest indices on each side.
    pub fn adjacent(radius: usize) -> Self {
        Self {
            radius,
            exclusion: 1,
        }
    }

    /// Pipeline default: `ks` indices on each side, beyond the offsets whose
    /// BAG blocks share a subsequence or overlapping samples with index `i`.
    /// Inside that zone every augmented entry is close to 1 whatever the data,
    /// so it carries no evidence about the label.
    pub fn for_bags(m: usize, ks: usize) -> Self {
        Self {
            radius: ks.max(1),
            exclusion: (ks + m).saturating_sub(1).max(1),
        }
    }
}

/// `conf[i]` is the mean over the neighbors of `i` of `max(0, A[i][j])`,
/// counting only neighbors with the same label (others contribute 0).
pub fn confidence_score(
    aug: &AugmentedCorrelationMatrix,
    labels: &[usize],
    radius: usize,
) -> Result<Vec<f64>> {
    confidence_score_with(aug, labels, ConfidenceNeighborhood::adjacent(radius))
}

pub fn confidence_score_with(
    aug: &AugmentedCorrelationMatrix,
    labels: &[usize],
    hood: ConfidenceNeighborhood,
) -> Result<Vec<f64>> {
    let size = aug.size();
    if labels.len() != size {
        return Err(Error::invalid(format!(
            "{} labels for a matrix of size {size}",
            labels.len()
        )));
    }
    if hood.radius == 0 || hood.exclusion == 0 {
        return Err(Error::invalid(
            "confidence radius and exclusion must be at least 1",
        ));
    }
    let reach = hood.exclusion + hood.radius - 1;
    Ok((0..size)
        .map(|i| {
            let left = i.saturating_sub(reach)..(i + 1).saturating_sub(hood.exclusion);
            let right = (i + hood.exclusion).min(size)..(i + reach + 1).min(size);
            let row = aug.row(i);
            let mut total = 0.0;
            let mut count = 0usize;
            for j in left.chain(right) {
                count += 1;
                if labels[j] == labels[i] {
                    total += row[j].max(0.0);
                }
            }
            if count == 0 {
                0.0
            } else {
                (total / count as f64).clamp(0.0, 1.0)
            }
        })
        .collect())
}
