use std::fmt;
use std::path::Path;
use std::str::FromStr;

use time2cluster::{LabelVector, TimeSeries};

use crate::{CliError, Result};

/// A CSV column given by header name or 0-based position.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
#[serde(untagged)]
pub enum ColumnSelector {
    Name(String),
    Index(usize),
}

impl FromStr for ColumnSelector {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Err(CliError::invalid("empty column selector"));
        }
        Ok(match s.parse::<usize>() {
            Ok(i) => ColumnSelector::Index(i),
            Err(_) => ColumnSelector::Name(s.to_string()),
        })
    }
}

impl fmt::Display for ColumnSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ColumnSelector::Name(n) => write!(f, "'{n}'"),
            ColumnSelector::Index(i) => write!(f, "#{i}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ingested {
    pub series: TimeSeries,
    pub labels: Option<LabelVector>,
    pub header: Option<Vec<String>>,
}

/// Reads one numeric column (and optionally an integer label column).
///
/// The first row is a header when any of its cells is not a number. Rows in
/// error messages are 1-based file lines. With no `value` column given, a
/// header column named `value` is used, else the only column of the file.
pub fn ingest_csv(
    path: &Path,
    value: Option<&ColumnSelector>,
    label: Option<&ColumnSelector>,
) -> Result<Ingested> {
    let file = std::fs::File::open(path)
        .map_err(|e| CliError::io(format!("cannot open {}", path.display()), e))?;
    ingest_reader(file, value, label).map_err(|e| match e {
        CliError::Invalid(msg) => CliError::Invalid(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn ingest_reader(
    reader: impl std::io::Read,
    value: Option<&ColumnSelector>,
    label: Option<&ColumnSelector>,
) -> Result<Ingested> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut records = rdr.records();
    let first = match records.next() {
        Some(rec) => rec?,
        None => return Err(CliError::invalid("empty file")),
    };
    let is_header = first.iter().any(|cell| cell.parse::<f64>().is_err());
    let header: Option<Vec<String>> = is_header.then(|| first.iter().map(str::to_string).collect());

    let width = first.len();
    let resolve = |sel: &ColumnSelector| -> Result<usize> {
        match sel {
            ColumnSelector::Index(i) if *i < width => Ok(*i),
            ColumnSelector::Index(i) => Err(CliError::invalid(format!(
                "column #{i} missing: the file has {width} columns"
            ))),
            ColumnSelector::Name(name) => header
                .as_ref()
                .and_then(|h| h.iter().position(|c| c == name))
                .ok_or_else(|| match &header {
                    Some(h) => CliError::invalid(format!(
                        "column '{name}' missing: header has {}",
                        h.join(", ")
                    )),
                    None => CliError::invalid(format!(
                        "column '{name}' requested but the file has no header row"
                    )),
                }),
        }
    };
    let value_col = match value {
        Some(sel) => resolve(sel)?,
        None => match header
            .as_ref()
            .and_then(|h| h.iter().position(|c| c == "value"))
        {
            Some(i) => i,
            None if width == 1 => 0,
            None => {
                return Err(CliError::invalid(format!(
                    "{width} columns and none named 'value'; choose one with --column"
                )))
            }
        },
    };
    let label_col = label.map(resolve).transpose()?;

    let mut values = Vec::new();
    let mut labels = label_col.map(|_| Vec::new());
    let mut handle = |rec: &csv::StringRecord| -> Result<()> {
        let line = rec.position().map_or(0, |p| p.line());
        let cell = |col: usize| {
            rec.get(col)
                .ok_or_else(|| CliError::invalid(format!("row {line}: column #{col} missing")))
        };
        let raw = cell(value_col)?;
        let v: f64 = raw.parse().map_err(|_| {
            CliError::invalid(format!(
                "row {line}, column #{value_col}: '{raw}' is not a number"
            ))
        })?;
        if !v.is_finite() {
            return Err(CliError::invalid(format!(
                "row {line}, column #{value_col}: non-finite value '{raw}'"
            )));
        }
        values.push(v);
        if let (Some(col), Some(out)) = (label_col, labels.as_mut()) {
            let raw = cell(col)?;
            let l: usize = raw.parse().map_err(|_| {
                CliError::invalid(format!(
                    "row {line}, column #{col}: label '{raw}' is not a non-negative integer"
                ))
            })?;
            out.push(l);
        }
        Ok(())
    };
    if !is_header {
        handle(&first)?;
    }
    for rec in records {
        handle(&rec?)?;
    }
    if values.is_empty() {
        return Err(CliError::invalid("no data rows"));
    }
    Ok(Ingested {
        series: TimeSeries::new(values)?,
        labels: labels.map(LabelVector::new),
        header,
    })
}
