//! Write-once store of per-structure invariants with on-disk persistence.
//!
//! Layout: `manifest.json` plus `records/NNNNN.pdd` and `records/NNNNN.amd`
//! binary records, numbered in label order.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::ingest::{LoadedStructure, Provenance};
use crate::invariants::{amd, decode_record, encode_amd, encode_pdd, pdd, ppc, AmdVector, PddMatrix, Record};
use crate::lattice::Structure;

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct InvariantRecord {
    pub label: String,
    pub amd: AmdVector,
    pub pdd: PddMatrix,
    /// Only periodic sets have a packing coefficient.
    pub ppc: Option<f64>,
    pub provenance: Provenance,
}

impl InvariantRecord {
    /// Computes PDD, AMD and PPC of a structure.
    pub fn compute(
        label: impl Into<String>,
        structure: &Structure,
        provenance: Provenance,
        k: usize,
        collapse_tol: f64,
    ) -> Result<Self, PipelineError> {
        let label = label.into();
        let matrix = pdd(structure, k, collapse_tol)
            .map_err(|source| PipelineError::Invariant { label: label.clone(), source })?;
        Ok(InvariantRecord {
            amd: amd(&matrix),
            pdd: matrix,
            ppc: structure.as_periodic().map(ppc),
            provenance,
            label,
        })
    }
}

/// Records keyed by unique label, all computed with the same `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct InvariantStore {
    k: usize,
    records: BTreeMap<String, InvariantRecord>,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    version: u32,
    k: usize,
    records: Vec<ManifestEntry>,
}

#[derive(Serialize, Deserialize)]
struct ManifestEntry {
    label: String,
    pdd: String,
    amd: String,
    ppc: Option<f64>,
    provenance: Provenance,
}

impl InvariantStore {
    pub fn new(k: usize) -> Self {
        InvariantStore { k, records: BTreeMap::new() }
    }

    /// Computes the invariants of every structure in parallel.
    pub fn from_structures(
        structures: &[LoadedStructure],
        k: usize,
        collapse_tol: f64,
    ) -> Result<Self, PipelineError> {
        let records: Vec<InvariantRecord> = structures
            .par_iter()
            .map(|s| InvariantRecord::compute(&s.label, &s.structure, s.provenance.clone(), k, collapse_tol))
            .collect::<Result<_, _>>()?;
        let mut store = InvariantStore::new(k);
        for r in records {
            store.insert(r)?;
        }
        Ok(store)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn insert(&mut self, record: InvariantRecord) -> Result<(), PipelineError> {
        if record.pdd.k() != self.k || record.amd.k() != self.k {
            return Err(PipelineError::MixedK {
                label: record.label,
                found: record.pdd.k(),
                expected: self.k,
            });
        }
        if self.records.contains_key(&record.label) {
            return Err(PipelineError::DuplicateLabel(record.label));
        }
        self.records.insert(record.label.clone(), record);
        Ok(())
    }

    pub fn get(&self, label: &str) -> Option<&InvariantRecord> {
        self.records.get(label)
    }

    /// Records in label order.
    pub fn records(&self) -> Vec<&InvariantRecord> {
        self.records.values().collect()
    }

    pub fn save(&self, dir: &Path) -> Result<(), PipelineError> {
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| PipelineError::Io { path, source }
        };
        let rec_dir = dir.join("records");
        std::fs::create_dir_all(&rec_dir).map_err(io(&rec_dir))?;
        let mut entries = Vec::with_capacity(self.len());
        for (i, r) in self.records.values().enumerate() {
            let pdd_name = format!("records/{i:05}.pdd");
            let amd_name = format!("records/{i:05}.amd");
            let pdd_path = dir.join(&pdd_name);
            let amd_path = dir.join(&amd_name);
            std::fs::write(&pdd_path, encode_pdd(&r.pdd)).map_err(io(&pdd_path))?;
            std::fs::write(&amd_path, encode_amd(&r.amd)).map_err(io(&amd_path))?;
            entries.push(ManifestEntry {
                label: r.label.clone(),
                pdd: pdd_name,
                amd: amd_name,
                ppc: r.ppc,
                provenance: r.provenance.clone(),
            });
        }
        let manifest = Manifest { version: MANIFEST_VERSION, k: self.k, records: entries };
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serialises");
        std::fs::write(&path, text).map_err(io(&path))
    }

    pub fn load(dir: &Path) -> Result<Self, PipelineError> {
        let path = dir.join("manifest.json");
        let text = std::fs::read_to_string(&path)
            .map_err(|source| PipelineError::Io { path: path.clone(), source })?;
        let manifest: Manifest = serde_json::from_str(&text)
            .map_err(|source| PipelineError::Manifest { path: path.clone(), source })?;
        let mut store = InvariantStore::new(manifest.k);
        for e in manifest.records {
            let pdd = match read_record(&dir.join(&e.pdd))? {
                Record::Pdd(p) => p,
                Record::Amd(_) => {
                    return Err(PipelineError::RecordKind { path: dir.join(&e.pdd), expected: "PDD" })
                }
            };
            let amd = match read_record(&dir.join(&e.amd))? {
                Record::Amd(a) => a,
                Record::Pdd(_) => {
                    return Err(PipelineError::RecordKind { path: dir.join(&e.amd), expected: "AMD" })
                }
            };
            store.insert(InvariantRecord { label: e.label, amd, pdd, ppc: e.ppc, provenance: e.provenance })?;
        }
        Ok(store)
    }
}

fn read_record(path: &Path) -> Result<Record, PipelineError> {
    let bytes =
        std::fs::read(path).map_err(|source| PipelineError::Io { path: path.to_path_buf(), source })?;
    decode_record(&bytes).map_err(|source| PipelineError::Codec { path: path.to_path_buf(), source })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{FiniteSet, Lattice, PeriodicSet};

    fn loaded(label: &str, structure: Structure) -> LoadedStructure {
        LoadedStructure {
            label: label.to_string(),
            structure,
            provenance: Provenance { path: format!("{label}.json"), block: None },
        }
    }

    #[test]
    fn persists_and_reloads() {
        let periodic =
            PeriodicSet::from_cartesian(Lattice::identity(2), &[vec![0.0, 0.0], vec![0.3, 0.4]]).unwrap();
        let finite = FiniteSet::new(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 2.0]]).unwrap();
        let store = InvariantStore::from_structures(
            &[loaded("b", periodic.into()), loaded("a/x", finite.into())],
            2,
            0.0,
        )
        .unwrap();
        assert_eq!(store.records()[0].label, "a/x");
        assert!(store.get("a/x").unwrap().ppc.is_none());
        assert!(store.get("b").unwrap().ppc.is_some());

        let dir = tempfile::tempdir().unwrap();
        store.save(dir.path()).unwrap();
        assert_eq!(InvariantStore::load(dir.path()).unwrap(), store);
    }

    #[test]
    fn rejects_mixed_k_and_duplicates() {
        let set = FiniteSet::new(vec![vec![0.0], vec![1.0], vec![3.0]]).unwrap();
        let mut store = InvariantStore::new(2);
        let prov = Provenance { path: "x".into(), block: None };
        store
            .insert(InvariantRecord::compute("x", &set.clone().into(), prov.clone(), 2, 0.0).unwrap())
            .unwrap();
        assert!(matches!(
            store.insert(InvariantRecord::compute("x", &set.clone().into(), prov.clone(), 2, 0.0).unwrap()),
            Err(PipelineError::DuplicateLabel(_))
        ));
        assert!(matches!(
            store.insert(InvariantRecord::compute("y", &set.into(), prov, 1, 0.0).unwrap()),
            Err(PipelineError::MixedK { .. })
        ));
    }
}
