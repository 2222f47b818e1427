use std::fmt;

use pdd_core::ingest::IngestError;
use pdd_core::pipeline::PipelineError;
use pdd_core::reconstruct::ReconstructError;

/// Failures reported by the command line tool, split by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, unreadable or malformed inputs. Exit code 1.
    Input(String),
    /// A computation that could not produce a trustworthy answer. Exit code 2.
    Numeric(String),
}

impl CliError {
    pub fn input(msg: impl fmt::Display) -> Self {
        CliError::Input(msg.to_string())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 1,
            CliError::Numeric(_) => 2,
        }
    }

    /// The single-line JSON object written to stderr.
    pub fn to_json(&self) -> String {
        let (kind, message) = match self {
            CliError::Input(m) => ("input", m),
            CliError::Numeric(m) => ("numeric", m),
        };
        serde_json::json!({ "error": kind, "message": message }).to_string()
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Metric { .. } => CliError::Numeric(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<ReconstructError> for CliError {
    fn from(e: ReconstructError) -> Self {
        match e {
            ReconstructError::NoPlacement { .. }
            | ReconstructError::Ambiguous { .. }
            | ReconstructError::Verification { .. }
            | ReconstructError::VoronoiCertificate { .. }
            | ReconstructError::NeighborBound { .. }
            | ReconstructError::Metric(_) => CliError::Numeric(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}
