use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the approximation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{what}: {count} elements exceed the configured cap of {cap}")]
    Resource {
        what: &'static str,
        count: u128,
        cap: u64,
    },
    #[error("argument {value} lies outside [-1/2, 1/2]")]
    Domain { value: f64 },
    #[error("derivative of {transform} is unbounded at the boundary")]
    UnboundedDerivative { transform: String },
    #[error("density of {transform} diverges at y = {y}")]
    DivergentDensity { transform: String, y: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("lattice of size {m} does not reconstruct the frequency set")]
    NotReconstructing { m: u64 },
    #[error("no reconstructing lattice found with size up to {cap}")]
    SearchExhausted { cap: u64 },
    #[error("lattice search ran out of time after sizes {}..{}", tried.start, tried.end)]
    SearchTimeout { tried: std::ops::Range<u64> },
    #[error("reference samples vanish identically")]
    Degenerate,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the numerical pipeline rather than of the input description.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Resource { .. }
                | Error::UnboundedDerivative { .. }
                | Error::DivergentDensity { .. }
                | Error::NotReconstructing { .. }
                | Error::SearchExhausted { .. }
                | Error::SearchTimeout { .. }
                | Error::Degenerate
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
