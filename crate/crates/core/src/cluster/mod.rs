//! kmeans++ over augmented-matrix rows, the end-to-end pipeline, confidence
//! scores, per-timepoint label expansion and the elbow sweep.

mod confidence;
mod elbow;
mod expand;
mod kmeans;
mod pipeline;

pub use confidence::{confidence_score, confidence_score_with, ConfidenceNeighborhood};
pub use elbow::{elbow_sweep, elbow_sweep_augmented, ElbowCurve};
pub use expand::{expand_labels, ExpandedLabels};
pub use kmeans::{kmeans_pp, kmeans_rows, ClusterResult, KMeansConfig, KMeansDiagnostics};
pub use pipeline::{time2cluster, StageTimings, Time2Cluster, Time2ClusterRun};
