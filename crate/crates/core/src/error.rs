use thiserror::Error;

use crate::window::MovingDistCurve;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid window: subsequence length {m} does not fit a series of length {n}")]
    InvalidWindow { m: usize, n: usize },

    #[error(
        "correlation matrix of {size}x{size} needs {required} bytes, above the memory cap of {cap} bytes; \
         raise the cap, use a larger stride or downsample the series"
    )]
    MemoryCap {
        size: usize,
        required: u64,
        cap: u64,
    },

    #[error("no periodicity: found {found} valleys (3 required) up to window {max_window}")]
    NoPeriodicity {
        found: usize,
        max_window: usize,
        curve: Box<MovingDistCurve>,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for errors caused by resource limits rather than bad input.
    pub fn is_resource(&self) -> bool {
        matches!(self, Error::MemoryCap { .. })
    }
}
