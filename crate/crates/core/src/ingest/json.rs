//! Plain JSON structure format.
//!
//! Periodic: `{"cell": [[v1], [v2], …], "motif_frac": [[…], …], "label": "…"}`
//! where each inner array of `cell` is one basis vector. Finite:
//! `{"points": [[…], …], "label": "…"}` in Cartesian coordinates.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{FiniteSet, Lattice, LatticeError, Motif, PeriodicSet, Structure};

#[derive(Debug, Error)]
pub enum JsonError {
    #[error("invalid JSON structure: {0}")]
    Format(#[from] serde_json::Error),
    #[error("structure needs either \"cell\" with \"motif_frac\" or \"points\"")]
    Shape,
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cell: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub motif_frac: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub species: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl StructureJson {
    pub fn into_structure(self) -> Result<Structure, JsonError> {
        match (self.cell, self.motif_frac, self.points) {
            (Some(cell), Some(frac), None) => {
                let lattice = Lattice::from_vectors(&cell)?;
                let mut set = PeriodicSet::new(lattice, Motif::wrapped(frac)?)?;
                if let Some(label) = self.label {
                    set = set.with_label(label);
                }
                if let Some(species) = self.species {
                    if species.len() != set.len() {
                        return Err(JsonError::Shape);
                    }
                    set = set.with_species(species);
                }
                Ok(Structure::Periodic(set))
            }
            (None, None, Some(points)) => {
                let mut set = FiniteSet::new(points)?;
                if let Some(label) = self.label {
                    set = set.with_label(label);
                }
                Ok(Structure::Finite(set))
            }
            _ => Err(JsonError::Shape),
        }
    }

    pub fn from_structure(structure: &Structure) -> Self {
        match structure {
            Structure::Periodic(s) => StructureJson {
                cell: Some(s.lattice().vectors()),
                motif_frac: Some(s.motif().points().to_vec()),
                points: None,
                species: s.species().map(<[String]>::to_vec),
                label: s.label().map(str::to_string),
            },
            Structure::Finite(f) => StructureJson {
                cell: None,
                motif_frac: None,
                points: Some(f.points().to_vec()),
                species: None,
                label: f.label().map(str::to_string),
            },
        }
    }
}

pub fn parse_structure_json(text: &str) -> Result<Structure, JsonError> {
    serde_json::from_str::<StructureJson>(text)?.into_structure()
}

pub fn structure_to_json(structure: &Structure) -> String {
    serde_json::to_string_pretty(&StructureJson::from_structure(structure))
        .expect("structure serialises")
}
