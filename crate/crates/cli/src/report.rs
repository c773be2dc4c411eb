use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use time2cluster::{ExpandedLabels, Method, RngSeed};

use crate::ingest::ColumnSelector;
use crate::{CliError, Result};

/// Everything a `cluster` run depends on, echoed into report.json.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub input: PathBuf,
    pub value_column: Option<ColumnSelector>,
    pub label_column: Option<ColumnSelector>,
    pub m: usize,
    /// "given" or "window-finder".
    pub m_source: String,
    pub ks: usize,
    pub k: usize,
    pub seed: RngSeed,
    pub stride: usize,
    pub out_dir: PathBuf,
    pub mem_cap: u64,
    pub method: Method,
    pub threads: Option<usize>,
    pub restarts: usize,
    pub max_iters: usize,
    pub pca: bool,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m < 2 {
            return Err(CliError::invalid(format!(
                "subsequence length m = {} must be at least 2",
                self.m
            )));
        }
        if self.ks < 1 || self.k < 1 || self.stride < 1 {
            return Err(CliError::invalid("ks, k and stride must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Serialize)]
struct LabelRow {
    index: usize,
    subseq_label: Option<usize>,
    timepoint_label: usize,
    confidence: f64,
}

/// One row per (downsampled) timepoint; `index` is in original sample units.
/// Timepoints past the last subsequence start have no subsequence label.
pub fn write_labels(
    path: &Path,
    subseq_labels: &[usize],
    expanded: &ExpandedLabels,
    stride: usize,
) -> Result<()> {
    let rows = expanded
        .labels
        .iter()
        .enumerate()
        .map(|(t, &label)| LabelRow {
            index: t * stride,
            subseq_label: subseq_labels.get(t).copied(),
            timepoint_label: label,
            confidence: expanded.confidence[t],
        });
    write_csv(path, rows)
}

/// Header plus one record per row.
pub fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()
        .map_err(|e| CliError::io(format!("cannot write {}", path.display()), e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::invalid(format!("cannot encode {}: {e}", path.display())))?;
    fs::write(path, text + "\n")
        .map_err(|e| CliError::io(format!("cannot write {}", path.display()), e))
}

/// Reads `index` and `timepoint_label` from a labels.csv.
pub fn read_labels(path: &Path) -> Result<Vec<(usize, usize)>> {
    #[derive(serde::Deserialize)]
    struct Row {
        index: usize,
        timepoint_label: usize,
    }
    let mut rdr = csv::Reader::from_path(path)?;
    let rows = rdr
        .deserialize::<Row>()
        .map(|r| r.map(|r| (r.index, r.timepoint_label)))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if rows.is_empty() {
        return Err(CliError::invalid(format!(
            "{}: no label rows",
            path.display()
        )));
    }
    Ok(rows)
}

/// Byte counts with an optional K, M or G suffix (powers of 1024).
pub fn parse_bytes(s: &str) -> Result<u64> {
    let s = s.trim();
    let (digits, mult) = match s.char_indices().last() {
        Some((i, c)) if c.is_ascii_alphabetic() => {
            let mult = match c.to_ascii_uppercase() {
                'K' => 1u64 << 10,
                'M' => 1 << 20,
                'G' => 1 << 30,
                _ => return Err(CliError::invalid(format!("bad size suffix in '{s}'"))),
            };
            (&s[..i], mult)
        }
        _ => (s, 1),
    };
    digits
        .parse::<u64>()
        .ok()
        .and_then(|d| d.checked_mul(mult))
        .ok_or_else(|| CliError::invalid(format!("bad byte count '{s}'")))
}
