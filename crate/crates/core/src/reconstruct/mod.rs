//! Reconstruction of generic periodic point sets from their PDD.
//!
//! Works in dimensions 2 and 3: the lattice is given, the motif is rebuilt
//! point by point by intersecting spheres whose radii are read off the PDD.

mod generic;
mod motif;
mod neighbors;
mod search;
mod voronoi;

pub use generic::{check_distance_generic, Condition, GenericityReport, Violation};
pub use motif::{reconstruct_motif, Placement, Reconstruction, ReconstructionTrace};
pub use neighbors::{basis_distances, neighbor_set, NeighborSet};
pub use voronoi::{covering_radius, reduce_basis, VoronoiCell};

use thiserror::Error;

use crate::invariants::InvariantError;
use crate::lattice::LatticeError;
use crate::metrics::MetricError;

/// Relative tolerance for matching distances read from a PDD.
pub const MATCH_TOL: f64 = 1e-6;

/// Largest EMD accepted between the input PDD and that of the rebuilt set.
pub const VERIFY_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum ReconstructError {
    #[error("reconstruction supports dimensions 2 and 3, got {0}")]
    UnsupportedDimension(usize),
    #[error("Voronoi domain volume {found} does not match cell volume {expected}")]
    VoronoiCertificate { expected: f64, found: f64 },
    #[error("neighbour set radius {radius} exceeds twice the covering radius {covering}")]
    NeighborBound { radius: f64, covering: f64 },
    #[error("point {0:?} is not a non-zero point of the open Voronoi domain")]
    NotInDomain(Vec<f64>),
    #[error("motif size must be positive")]
    ZeroMotif,
    #[error("weight {weight} of row {row} times m = {m} is not an integer")]
    WeightNotInteger { row: usize, weight: String, m: usize },
    #[error("row {row} reaches distance {last} but reconstruction needs more than {required}; increase k")]
    InsufficientK { row: usize, last: f64, required: f64 },
    #[error("no placement of the point for row {row} is consistent with the PDD")]
    NoPlacement { row: usize },
    #[error("row {row} admits several placements, the set violates genericity condition {condition}")]
    Ambiguous { row: usize, condition: Condition, witnesses: Vec<Vec<f64>> },
    #[error("rebuilt set differs from the input PDD by EMD {emd}")]
    Verification { emd: f64 },
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Invariant(#[from] InvariantError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}
