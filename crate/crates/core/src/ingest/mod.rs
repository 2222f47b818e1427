//! Reading structures from CIF and JSON files.

mod cif;
mod json;
mod symop;

pub use cif::{
    merge_sites, parse_cif, parse_cif_detailed, parse_cif_number, parse_document, CifBlock,
    CifDocument, CifError, CifOutcome, CifValue, CifWarning, LoopTable, MergedSite,
    SITE_MERGE_TOL,
};
pub use json::{parse_structure_json, structure_to_json, JsonError, StructureJson};
pub use symop::{parse_symmetry_op, Rational, SymmetryOp, SymopError};

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::lattice::Structure;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Cif { path: PathBuf, source: CifError },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: JsonError },
    #[error("{0}: unknown structure format (expected .cif or .json)")]
    UnknownFormat(PathBuf),
}

/// Where a structure came from.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub struct Provenance {
    pub path: String,
    pub block: Option<String>,
}

/// A structure read from disk, labelled for reporting.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedStructure {
    /// File stem for JSON files, `stem/block` for CIF data blocks.
    pub label: String,
    pub structure: Structure,
    pub provenance: Provenance,
}

/// Reads every structure in a `.cif` or `.json` file.
pub fn read_structures(path: &Path) -> Result<Vec<LoadedStructure>, IngestError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| IngestError::Io { path: path.to_path_buf(), source })?;
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let ext = path
        .extension()
        .map(|e| e.to_string_lossy().to_ascii_lowercase())
        .unwrap_or_default();
    let display = path.display().to_string();
    match ext.as_str() {
        "cif" => {
            let sets = parse_cif(&text)
                .map_err(|source| IngestError::Cif { path: path.to_path_buf(), source })?;
            Ok(sets
                .into_iter()
                .map(|set| {
                    let block = set.label().unwrap_or_default().to_string();
                    LoadedStructure {
                        label: format!("{stem}/{block}"),
                        structure: Structure::Periodic(set),
                        provenance: Provenance { path: display.clone(), block: Some(block) },
                    }
                })
                .collect())
        }
        "json" => {
            let structure = parse_structure_json(&text)
                .map_err(|source| IngestError::Json { path: path.to_path_buf(), source })?;
            Ok(vec![LoadedStructure {
                label: stem,
                structure,
                provenance: Provenance { path: display, block: None },
            }])
        }
        _ => Err(IngestError::UnknownFormat(path.to_path_buf())),
    }
}

/// Structure files (`.cif`, `.json`) directly inside `dir`, sorted by name.
pub fn structure_files(dir: &Path) -> Result<Vec<PathBuf>, IngestError> {
    let entries =
        std::fs::read_dir(dir).map_err(|source| IngestError::Io { path: dir.to_path_buf(), source })?;
    let mut files = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|source| IngestError::Io { path: dir.to_path_buf(), source })?;
        let path = entry.path();
        let ext = path
            .extension()
            .map(|e| e.to_string_lossy().to_ascii_lowercase())
            .unwrap_or_default();
        if path.is_file() && (ext == "cif" || ext == "json") {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}
