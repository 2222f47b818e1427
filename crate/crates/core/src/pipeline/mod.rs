//! Dataset-scale operations: an invariant store, an AMD-filtered duplicate
//! scan confirmed by EMD, and a minimum spanning tree over PPC-pruned candidates.

mod mst;
mod scan;
mod store;

pub use mst::{build_mst, Mst, MstEdge};
pub use scan::{scan_duplicates, DuplicatePair, DuplicateReport};
pub use store::{InvariantRecord, InvariantStore, MANIFEST_VERSION};

use std::path::PathBuf;

use thiserror::Error;

use crate::invariants::{CodecError, InvariantError};
use crate::metrics::MetricError;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("record {label} has k = {found}, the store uses k = {expected}")]
    MixedK { label: String, found: usize, expected: usize },
    #[error("duplicate label {0}")]
    DuplicateLabel(String),
    #[error("the store has {found} records, at least {needed} are needed")]
    TooFewRecords { found: usize, needed: usize },
    #[error("thresholds must be finite and non-negative, got {0}")]
    BadThreshold(f64),
    #[error("candidate count must be positive")]
    ZeroCandidates,
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Codec { path: PathBuf, source: CodecError },
    #[error("{path}: invalid manifest: {source}")]
    Manifest { path: PathBuf, source: serde_json::Error },
    #[error("{path}: expected a {expected} record")]
    RecordKind { path: PathBuf, expected: &'static str },
    #[error("{label}: {source}")]
    Invariant { label: String, source: InvariantError },
    #[error("{a} vs {b}: {source}")]
    Metric { a: String, b: String, source: MetricError },
}
