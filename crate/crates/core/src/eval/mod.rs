//! Clustering metrics and the experiment harnesses built on them.

mod harness;
mod matching;
mod metrics;

pub use harness::{
    baseline_euclidean_kmeans, evaluate_run, inject_spikes, robustness_sweep, sensitivity_sweep,
    KsRule, RobustnessRow, SensitivityRow, DEFAULT_SPIKE_MAGNITUDE,
};
pub use matching::max_weight_matching;
pub use metrics::{
    adjusted_rand_index, evaluate, macro_f1, purity, LabelVector, MacroF1, MetricsReport,
};
