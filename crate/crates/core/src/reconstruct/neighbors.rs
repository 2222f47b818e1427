//! Neighbour set `N(Λ)` and basis distances of points in the Voronoi domain.

use serde::{Deserialize, Serialize};

use super::voronoi::{norm2, VoronoiCell};
use super::ReconstructError;
use crate::lattice::{distance, norm, Lattice};

/// Grid resolution per axis when sampling the Voronoi domain.
const GRID: usize = 20;

/// Lattice points of the smallest ball around the origin that spans space and
/// contains the `n+1` nearest lattice points of every point in `V(Λ;0)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NeighborSet {
    pub points: Vec<Vec<f64>>,
    pub radius: f64,
    #[serde(skip)]
    cell: Option<VoronoiCell>,
}

impl NeighborSet {
    pub fn cell(&self) -> &VoronoiCell {
        self.cell.as_ref().expect("neighbour sets are built with their cell")
    }
}

/// Rank of a set of vectors in dimension ≤ 3, with a relative tolerance.
pub(crate) fn rank(vectors: &[&[f64]], n: usize) -> usize {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for v in vectors {
        let mut w = v.to_vec();
        // Gram-Schmidt against the accepted vectors
        for b in &basis {
            let c = crate::lattice::dot(&w, b) / norm2(b);
            for (x, y) in w.iter_mut().zip(b) {
                *x -= c * y;
            }
        }
        if norm(&w) > 1e-9 * norm(v).max(1e-300) {
            basis.push(w);
            if basis.len() == n {
                break;
            }
        }
    }
    basis.len()
}

/// Sample points of the closed domain: shrunken vertices plus a grid.
fn domain_samples(cell: &VoronoiCell) -> Vec<Vec<f64>> {
    let n = cell.dim();
    let mut samples: Vec<Vec<f64>> =
        cell.vertices().iter().map(|v| v.iter().map(|x| x * (1.0 - 1e-6)).collect()).collect();
    let r = cell.covering_radius();
    let step = 2.0 * r / GRID as f64;
    let mut idx = vec![0usize; n];
    loop {
        let q: Vec<f64> = idx.iter().map(|&i| -r + step * (i as f64 + 0.5)).collect();
        if cell.contains(&q, 0.0) {
            samples.push(q);
        }
        let mut t = 0;
        loop {
            if t == n {
                return samples;
            }
            if idx[t] + 1 < GRID {
                idx[t] += 1;
                break;
            }
            idx[t] = 0;
            t += 1;
        }
    }
}

/// Computes `N(Λ)` for a 2D or 3D lattice.
pub fn neighbor_set(lattice: &Lattice) -> Result<NeighborSet, ReconstructError> {
    let cell = VoronoiCell::new(lattice)?;
    let n = cell.dim();
    let big_r = cell.covering_radius();
    // every n+1 nearest neighbour of a point in V lies within 2R of the origin
    let candidates = cell.lattice_points_within(2.0 * big_r * (1.0 + 1e-9) + 1e-12);

    // smallest radius whose ball spans ℝⁿ
    let mut span_radius = 0.0;
    {
        let mut chosen: Vec<&[f64]> = Vec::new();
        for p in &candidates {
            chosen.push(p);
            if rank(&chosen, n) > rank(&chosen[..chosen.len() - 1], n) {
                span_radius = norm(p);
            }
            if rank(&chosen, n) == n {
                break;
            }
        }
    }

    // smallest radius containing some choice of n+1 nearest lattice points of every sample
    let mut near_radius: f64 = 0.0;
    let origin = vec![0.0; n];
    for q in domain_samples(&cell) {
        let mut d: Vec<(f64, f64)> = std::iter::once(&origin)
            .chain(candidates.iter())
            .map(|p| (distance(&q, p), norm(p)))
            .collect();
        d.sort_by(|a, b| a.0.total_cmp(&b.0));
        let cutoff = d[n].0 * (1.0 + 1e-9);
        let mut tied: Vec<f64> = d.iter().take_while(|x| x.0 <= cutoff).map(|x| x.1).collect();
        tied.sort_by(f64::total_cmp);
        near_radius = near_radius.max(tied[n]);
    }

    let radius = span_radius.max(near_radius);
    let points: Vec<Vec<f64>> = candidates
        .into_iter()
        .filter(|p| norm(p) <= radius * (1.0 + 1e-9))
        .collect();
    if points.iter().any(|p| norm(p) > 2.0 * big_r * (1.0 + 1e-9)) {
        return Err(ReconstructError::NeighborBound { radius, covering: big_r });
    }
    Ok(NeighborSet { points, radius, cell: Some(cell) })
}

/// Basis distances of `q`: the lexicographically smallest sorted distance list
/// to `n` linearly independent points of `N(Λ)`, with one realising tuple.
pub fn basis_distances(
    q: &[f64],
    nset: &NeighborSet,
) -> Result<(Vec<f64>, Vec<Vec<f64>>), ReconstructError> {
    let cell = nset.cell();
    let n = cell.dim();
    if q.len() != n || !cell.contains(q, 1e-9) || norm(q) == 0.0 {
        return Err(ReconstructError::NotInDomain(q.to_vec()));
    }
    // greedy selection over the linear matroid gives the lexicographic minimum
    let mut order: Vec<(f64, &Vec<f64>)> = nset.points.iter().map(|p| (distance(q, p), p)).collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| crate::invariants::lex_cmp(a.1, b.1)));
    let mut chosen: Vec<&Vec<f64>> = Vec::new();
    let mut dists = Vec::new();
    for (d, p) in order {
        let mut trial: Vec<&[f64]> = chosen.iter().map(|v| v.as_slice()).collect();
        trial.push(p);
        if rank(&trial, n) == trial.len() {
            chosen.push(p);
            dists.push(d);
            if chosen.len() == n {
                break;
            }
        }
    }
    Ok((dists, chosen.into_iter().cloned().collect()))
}
