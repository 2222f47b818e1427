//! k-nearest-neighbour distances in finite and periodic point sets.
//!
//! For a periodic set the cloud of lattice translates grows shell by shell and
//! stops only once the k-th distance of every motif point is within the radius
//! around which the cloud is provably complete.

mod kdtree;
mod shells;

pub use kdtree::KdTree;
pub use shells::{shell_coefficients, translate, ShellGenerator};

use rayon::prelude::*;
use thiserror::Error;

use crate::lattice::{FiniteSet, LatticeError, PeriodicSet, PointSetRef};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SearchError {
    #[error("k must be positive")]
    ZeroK,
    #[error("finite set of {points} points has fewer than k = {k} neighbours per point")]
    TooFewPoints { points: usize, k: usize },
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

/// Sorted distances from every motif point to its `k` nearest neighbours.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    rows: Vec<Vec<f64>>,
    row_order: Vec<usize>,
}

impl DistanceMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Self {
        let row_order = (0..rows.len()).collect();
        DistanceMatrix { rows, row_order }
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn into_rows(self) -> Vec<Vec<f64>> {
        self.rows
    }

    /// Original motif index of each row.
    pub fn row_order(&self) -> &[usize] {
        &self.row_order
    }

    pub fn k(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn m(&self) -> usize {
        self.rows.len()
    }
}

/// Computes `D(S;k)` for a periodic or finite set.
pub fn neighbor_distances<'a>(
    set: impl Into<PointSetRef<'a>>,
    k: usize,
) -> Result<DistanceMatrix, SearchError> {
    if k == 0 {
        return Err(SearchError::ZeroK);
    }
    match set.into() {
        PointSetRef::Periodic(p) => Ok(periodic_distances(p, k)),
        PointSetRef::Finite(f) => finite_distances(f, k),
    }
}

fn finite_distances(set: &FiniteSet, k: usize) -> Result<DistanceMatrix, SearchError> {
    if k + 1 > set.len() {
        return Err(SearchError::TooFewPoints { points: set.len(), k });
    }
    let dim = set.dim();
    let tree = KdTree::new(dim, set.points().iter().flatten().copied().collect());
    let rows = set
        .points()
        .par_iter()
        .enumerate()
        .map(|(i, p)| row_from(&tree, p, i, k))
        .collect();
    Ok(DistanceMatrix::new(rows))
}

fn row_from(tree: &KdTree, query: &[f64], own: usize, k: usize) -> Vec<f64> {
    // sqrt of the same squared sum the tree ranked by, so the row equals
    // crate::lattice::distance applied to the chosen neighbours
    tree.nearest(query, k, Some(own)).into_iter().map(|(d2, _)| d2.sqrt()).collect()
}

fn periodic_distances(set: &PeriodicSet, k: usize) -> DistanceMatrix {
    let dim = set.dim();
    let motif = set.to_cartesian();
    let m = motif.len();
    let mut gen = ShellGenerator::new(set.lattice().clone(), motif.clone());
    let mut cloud = Vec::new();
    gen.next_shell_into(&mut cloud);
    // the first m cloud points are the motif itself, so row i excludes cloud index i
    while cloud.len() / dim < k + 1 || gen.covered_radius() == 0.0 {
        gen.next_shell_into(&mut cloud);
    }
    loop {
        let tree = KdTree::new(dim, cloud.clone());
        let rows: Vec<Vec<f64>> = motif
            .par_iter()
            .enumerate()
            .map(|(i, p)| row_from(&tree, p, i, k))
            .collect();
        let worst = rows.iter().map(|r| r[k - 1]).fold(0.0_f64, f64::max);
        let covered = gen.covered_radius();
        log::trace!(
            "cloud of {} points, covered radius {covered}, worst k-th distance {worst}",
            cloud.len() / dim
        );
        if worst <= covered {
            debug_assert_eq!(rows.len(), m);
            return DistanceMatrix::new(rows);
        }
        // jump straight to the shell whose covered radius reaches the current worst distance
        let target = (worst / gen.min_height()).ceil() as i64;
        let current = gen.emitted_shell_index().unwrap_or(0);
        for _ in current..target.max(current + 1) {
            gen.next_shell_into(&mut cloud);
        }
    }
}

/// Half the minimum distance between points of the set (the packing radius).
pub fn packing_radius<'a>(set: impl Into<PointSetRef<'a>>) -> Result<f64, SearchError> {
    let d = neighbor_distances(set, 1)?;
    Ok(d.rows().iter().map(|r| r[0]).fold(f64::INFINITY, f64::min) / 2.0)
}
