use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::augment::{augment_owned, AugmentedCorrelationMatrix};
use crate::cluster::confidence::{confidence_score_with, ConfidenceNeighborhood};
use crate::cluster::kmeans::{kmeans_rows, ClusterResult, KMeansConfig};
use crate::error::{Error, Result};
use crate::profile::{correlation_matrix_capped, Method, DEFAULT_MEMORY_CAP};
use crate::series::TimeSeries;

/// Wall-clock milliseconds per pipeline stage.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub correlation_ms: f64,
    pub augment_ms: f64,
    pub kmeans_ms: f64,
    pub confidence_ms: f64,
}

impl StageTimings {
    pub fn total_ms(&self) -> f64 {
        self.correlation_ms + self.augment_ms + self.kmeans_ms + self.confidence_ms
    }
}

#[derive(Debug, Clone)]
pub struct Time2ClusterRun {
    pub result: ClusterResult,
    pub augmented: AugmentedCorrelationMatrix,
    pub timings: StageTimings,
}

/// correlation matrix -> max pooling -> kmeans++ on rows -> confidence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Time2Cluster {
    pub m: usize,
    pub ks: usize,
    pub kmeans: KMeansConfig,
    pub method: Method,
    pub memory_cap: u64,
    /// Defaults to [`ConfidenceNeighborhood::for_bags`].
    pub neighborhood: Option<ConfidenceNeighborhood>,
}

impl Time2Cluster {
    pub fn new(m: usize, ks: usize, kmeans: KMeansConfig) -> Self {
        Self {
            m,
            ks,
            kmeans,
            method: Method::Fast,
            memory_cap: DEFAULT_MEMORY_CAP,
            neighborhood: None,
        }
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn with_memory_cap(mut self, bytes: u64) -> Self {
        self.memory_cap = bytes;
        self
    }

    pub fn with_neighborhood(mut self, hood: ConfidenceNeighborhood) -> Self {
        self.neighborhood = Some(hood);
        self
    }

    pub fn neighborhood(&self) -> ConfidenceNeighborhood {
        self.neighborhood
            .unwrap_or_else(|| ConfidenceNeighborhood::for_bags(self.m, self.ks))
    }

    /// Builds the augmented matrix, returning correlation and pooling timings.
    pub fn augmented(&self, ts: &TimeSeries) -> Result<(AugmentedCorrelationMatrix, StageTimings)> {
        if self.ks == 0 {
            return Err(Error::invalid("kernel size must be at least 1"));
        }
        let mut timings = StageTimings::default();
        let start = Instant::now();
        let mat = correlation_matrix_capped(ts, self.m, self.method, self.memory_cap)?;
        timings.correlation_ms = elapsed_ms(start);
        let start = Instant::now();
        let aug = augment_owned(mat, self.ks)?;
        timings.augment_ms = elapsed_ms(start);
        Ok((aug, timings))
    }

    /// Clusters the rows of an already built augmented matrix.
    pub fn cluster_augmented(
        &self,
        aug: &AugmentedCorrelationMatrix,
        timings: &mut StageTimings,
    ) -> Result<ClusterResult> {
        let start = Instant::now();
        let mut result = kmeans_rows(aug.as_slice(), aug.size(), &self.kmeans)?;
        timings.kmeans_ms = elapsed_ms(start);
        let start = Instant::now();
        result.confidence = confidence_score_with(aug, &result.labels, self.neighborhood())?;
        timings.confidence_ms = elapsed_ms(start);
        Ok(result)
    }

    pub fn run(&self, ts: &TimeSeries) -> Result<Time2ClusterRun> {
        let (augmented, mut timings) = self.augmented(ts)?;
        let result = self.cluster_augmented(&augmented, &mut timings)?;
        Ok(Time2ClusterRun {
            result,
            augmented,
            timings,
        })
    }
}

/// Labels every length-`m` subsequence of `ts` into `cfg.k` behaviors.
pub fn time2cluster(
    ts: &TimeSeries,
    m: usize,
    ks: usize,
    cfg: &KMeansConfig,
) -> Result<ClusterResult> {
    Ok(Time2Cluster::new(m, ks, *cfg).run(ts)?.result)
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}
