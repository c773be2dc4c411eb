//! Library side of the `t2c` command-line tool: CSV ingestion, the 2-D
//! projection of augmented matrices and the report writers.

pub mod ingest;
pub mod pca;
pub mod report;

pub use ingest::{ingest_csv, ColumnSelector, Ingested};
pub use pca::{project_2d, project_rows, Projection};
pub use report::RunConfig;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),

    #[error("{0}")]
    Resource(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        source: std::io::Error,
    },

    #[error(
        "principal component {component} did not converge in {iterations} iterations \
         (residual {residual:e})"
    )]
    NoConvergence {
        component: usize,
        iterations: usize,
        residual: f64,
    },

    #[error(transparent)]
    Core(#[from] time2cluster::Error),
}

impl CliError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        CliError::Invalid(msg.into())
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }

    /// 2 for bad input, 3 for resource limits.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Resource(_) => 3,
            CliError::Core(e) if e.is_resource() => 3,
            _ => 2,
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => CliError::io("csv", io),
            other => CliError::Invalid(format!("csv: {other:?}")),
        }
    }
}
