use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::matching::max_weight_matching;

/// Integer class labels in `[0, num_classes)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelVector {
    pub labels: Vec<usize>,
    pub num_classes: usize,
}

impl LabelVector {
    pub fn new(labels: Vec<usize>) -> Self {
        let num_classes = labels.iter().max().map_or(0, |&l| l + 1);
        Self {
            labels,
            num_classes,
        }
    }

    pub fn with_classes(labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if let Some(&bad) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(Error::invalid(format!(
                "label {bad} outside [0, {num_classes})"
            )));
        }
        Ok(Self {
            labels,
            num_classes,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Number of occurrences of each class.
    pub fn counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacroF1 {
    pub macro_f1: f64,
    /// F1 of each true class present, in increasing class order.
    pub per_class_f1: Vec<f64>,
    /// `(class, cluster)` pairs of the optimal matching; unmatched classes are absent.
    pub matching: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub macro_f1: f64,
    pub ari: f64,
    pub purity: f64,
    pub per_class_f1: Vec<f64>,
    pub matching: Vec<(usize, usize)>,
}

/// Contingency counts between the distinct labels of `truth` (rows) and `pred` (columns).
struct Contingency {
    classes: Vec<usize>,
    clusters: Vec<usize>,
    table: Vec<Vec<usize>>,
    n: usize,
}

impl Contingency {
    fn new(truth: &[usize], pred: &[usize]) -> Result<Self> {
        if truth.len() != pred.len() {
            return Err(Error::invalid(format!(
                "label vectors differ in length: {} vs {}",
                truth.len(),
                pred.len()
            )));
        }
        if truth.is_empty() {
            return Err(Error::invalid("label vectors are empty"));
        }
        let classes = distinct(truth);
        let clusters = distinct(pred);
        let row_of = index_map(&classes);
        let col_of = index_map(&clusters);
        let mut table = vec![vec![0usize; clusters.len()]; classes.len()];
        for (&t, &p) in truth.iter().zip(pred) {
            table[row_of[t]][col_of[p]] += 1;
        }
        Ok(Self {
            classes,
            clusters,
            table,
            n: truth.len(),
        })
    }

    fn row_sums(&self) -> Vec<usize> {
        self.table.iter().map(|r| r.iter().sum()).collect()
    }

    fn col_sums(&self) -> Vec<usize> {
        (0..self.clusters.len())
            .map(|c| self.table.iter().map(|r| r[c]).sum())
            .collect()
    }
}

fn distinct(labels: &[usize]) -> Vec<usize> {
    let mut v = labels.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

fn index_map(values: &[usize]) -> Vec<usize> {
    let mut map = vec![usize::MAX; values.last().map_or(0, |&v| v + 1)];
    for (i, &v) in values.iter().enumerate() {
        map[v] = i;
    }
    map
}

/// Mean per-class F1 under the one-to-one class/cluster matching with the
/// largest total F1.
pub fn macro_f1(truth: &[usize], pred: &[usize]) -> Result<MacroF1> {
    let ct = Contingency::new(truth, pred)?;
    let class_sizes = ct.row_sums();
    let cluster_sizes = ct.col_sums();
    // F1 = 2 tp / (|class| + |cluster|)
    let f1: Vec<Vec<f64>> = ct
        .table
        .iter()
        .zip(&class_sizes)
        .map(|(row, &cs)| {
            row.iter()
                .zip(&cluster_sizes)
                .map(|(&tp, &ks)| 2.0 * tp as f64 / (cs + ks) as f64)
                .collect()
        })
        .collect();
    let assignment = max_weight_matching(&f1);
    let per_class_f1: Vec<f64> = assignment
        .iter()
        .enumerate()
        .map(|(r, a)| a.map_or(0.0, |c| f1[r][c]))
        .collect();
    let matching = assignment
        .iter()
        .enumerate()
        .filter_map(|(r, a)| a.map(|c| (ct.classes[r], ct.clusters[c])))
        .collect();
    Ok(MacroF1 {
        macro_f1: per_class_f1.iter().sum::<f64>() / per_class_f1.len() as f64,
        per_class_f1,
        matching,
    })
}

fn pairs(x: usize) -> f64 {
    let x = x as f64;
    x * (x - 1.0) / 2.0
}

/// Rand index corrected for chance, from the contingency table.
pub fn adjusted_rand_index(truth: &[usize], pred: &[usize]) -> Result<f64> {
    let ct = Contingency::new(truth, pred)?;
    if ct.n < 2 {
        return Err(Error::invalid("ARI needs at least 2 points"));
    }
    let index: f64 = ct.table.iter().flatten().map(|&c| pairs(c)).sum();
    let a: f64 = ct.row_sums().into_iter().map(pairs).sum();
    let b: f64 = ct.col_sums().into_iter().map(pairs).sum();
    let expected = a * b / pairs(ct.n);
    let max = 0.5 * (a + b);
    if max == expected {
        // Both partitions trivial (all one cluster or all singletons) and identical.
        return Ok(1.0);
    }
    Ok((index - expected) / (max - expected))
}

/// Fraction of points belonging to the majority class of their cluster.
pub fn purity(truth: &[usize], pred: &[usize]) -> Result<f64> {
    let ct = Contingency::new(truth, pred)?;
    let hits: usize = (0..ct.clusters.len())
        .map(|c| ct.table.iter().map(|r| r[c]).max().unwrap_or(0))
        .sum();
    Ok(hits as f64 / ct.n as f64)
}

pub fn evaluate(truth: &[usize], pred: &[usize]) -> Result<MetricsReport> {
    let f1 = macro_f1(truth, pred)?;
    Ok(MetricsReport {
        macro_f1: f1.macro_f1,
        ari: adjusted_rand_index(truth, pred)?,
        purity: purity(truth, pred)?,
        per_class_f1: f1.per_class_f1,
        matching: f1.matching,
    })
}
