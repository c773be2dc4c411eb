use serde::{Deserialize, Serialize};

use crate::augment::AugmentedCorrelationMatrix;
use crate::cluster::kmeans::{kmeans_rows, KMeansConfig};
use crate::cluster::pipeline::Time2Cluster;
use crate::error::{Error, Result};
use crate::series::TimeSeries;

/// Inertia (sum of squared distances to the assigned center) per K.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElbowCurve {
    pub k_values: Vec<usize>,
    pub inertias: Vec<f64>,
    /// K values whose inertia exceeds that of the preceding (smaller) K.
    pub non_monotone: Vec<usize>,
}

pub fn elbow_sweep(
    ts: &TimeSeries,
    m: usize,
    ks: usize,
    k_range: &[usize],
    cfg: &KMeansConfig,
) -> Result<ElbowCurve> {
    let (aug, _) = Time2Cluster::new(m, ks, *cfg).augmented(ts)?;
    elbow_sweep_augmented(&aug, k_range, cfg)
}

/// One kmeans++ run per K over the same augmented matrix; `cfg.k` is ignored.
pub fn elbow_sweep_augmented(
    aug: &AugmentedCorrelationMatrix,
    k_range: &[usize],
    cfg: &KMeansConfig,
) -> Result<ElbowCurve> {
    if k_range.is_empty() {
        return Err(Error::invalid("elbow sweep needs at least one K"));
    }
    let mut k_values: Vec<usize> = k_range.to_vec();
    k_values.sort_unstable();
    k_values.dedup();
    let inertias = k_values
        .iter()
        .map(|&k| Ok(kmeans_rows(aug.as_slice(), aug.size(), &cfg.with_k(k))?.inertia))
        .collect::<Result<Vec<f64>>>()?;
    let non_monotone = (1..k_values.len())
        .filter(|&i| inertias[i] > inertias[i - 1] * (1.0 + 1e-9))
        .map(|i| k_values[i])
        .collect();
    Ok(ElbowCurve {
        k_values,
        inertias,
        non_monotone,
    })
}
