//! Continuous isometry invariants of finite and periodic point sets.
//!
//! The crate computes pointwise distance distributions (PDD) and average
//! minimum distances (AMD), compares them with an exact Earth Mover's Distance,
//! scans collections for near-duplicates and rebuilds generic periodic sets
//! from their invariants.

pub mod ingest;
pub mod invariants;
pub mod lattice;
pub mod metrics;
pub mod nnsearch;
pub mod pipeline;
pub mod reconstruct;

pub use invariants::{amd, pdd, ppc, AmdVector, PddMatrix, PddRow, Weight};
pub use lattice::{
    cell_from_parameters, cell_metrics, to_cartesian, CellMetrics, FiniteSet, Lattice, Motif,
    PeriodicSet, PointSetRef, Structure,
};
pub use metrics::{amd_distance, emd, row_distance, Flow, FlowEntry};
pub use nnsearch::{neighbor_distances, DistanceMatrix, ShellGenerator};
pub use reconstruct::{check_distance_generic, reconstruct_motif, GenericityReport, Reconstruction};
pub use pipeline::{build_mst, scan_duplicates, DuplicateReport, InvariantStore, Mst};
