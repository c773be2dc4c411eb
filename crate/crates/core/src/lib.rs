//! Subsequence time-series clustering.
//!
//! The pipeline builds the all-pairs Pearson correlation matrix between
//! length-`m` subsequences ([`profile`]), max-pools it over runs of `ks`
//! consecutive subsequences so that phase-shifted copies of one behavior
//! correlate highly ([`augment`]), clusters the rows with kmeans++ and scores
//! every label with a neighborhood confidence ([`cluster`]).
//!
//! [`window`] estimates the natural window size of a series from the minima of
//! its moving-average deviation curve, [`eval`] holds the metrics and
//! experiment harnesses, and [`synthgen`] produces labelled synthetic series.
//!
//! All indices are 0-based.

pub mod augment;
pub mod cluster;
pub mod error;
pub mod eval;
pub mod profile;
pub mod series;
pub mod synthgen;
pub mod window;

pub use augment::{
    augment_matrix, augment_owned, bag_correlation, AugmentedCorrelationMatrix, BagSpec,
};
pub use cluster::{
    confidence_score, elbow_sweep, expand_labels, kmeans_pp, time2cluster, ClusterResult,
    ConfidenceNeighborhood, ElbowCurve, ExpandedLabels, KMeansConfig, Time2Cluster,
};
pub use error::{Error, Result};
pub use eval::{adjusted_rand_index, macro_f1, purity, LabelVector, MetricsReport};
pub use profile::{
    corr_to_dist, correlation_matrix, correlation_matrix_capped, dist_to_corr, distance_profile,
    CorrelationMatrix, DistanceProfile, Method,
};
pub use series::{extract_subsequences, znorm, RngSeed, SubsequenceSpec, TimeSeries};
pub use window::{multi_window_finder, variable_window, WindowEstimate};
