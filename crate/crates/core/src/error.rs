use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the simulation and estimation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// A user-supplied parameter failed validation. `field` names the offending input.
    #[error("invalid {field}: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("covariance factorization failed for n = {n}, H = {hurst} (matrix not positive definite after jitter)")]
    Factorization { n: usize, hurst: f64 },

    #[error("non-finite value {what} at x = {x}")]
    NonFinite { what: &'static str, x: f64 },

    #[error("empty proposal set: no m satisfies m*L(m) <= (n*delta)^b_H = {threshold:.6}; use a longer horizon or an explicit m override")]
    EmptyProposalSet { threshold: f64 },

    #[error("m = {m} is not in the proposal set {{{}}}; pass an m override to bypass", format_set(.proposal))]
    NotInProposalSet { m: usize, proposal: Vec<usize> },

    #[error("replicate {replicate} (seed {seed}) failed during {stage}: {source}")]
    Replicate {
        replicate: usize,
        seed: u64,
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}:{line}: {reason}")]
    Parse { path: PathBuf, line: usize, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { field, reason: reason.into() }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// True for failures of the numerical machinery, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Factorization { .. } | Error::NonFinite { .. } => true,
            Error::Replicate { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

fn format_set(set: &[usize]) -> String {
    set.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(",")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
