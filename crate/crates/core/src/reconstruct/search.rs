//! Candidate positions of a motif point from a list of its distances to the
//! lattice translates of the origin.

use super::neighbors::NeighborSet;
use super::voronoi::{cross, norm2, VoronoiCell};
use super::MATCH_TOL;
use crate::lattice::{distance, dot, norm};

/// Whether two distances agree up to [`MATCH_TOL`].
pub(crate) fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= MATCH_TOL * a.abs().max(b.abs()).max(1.0)
}

/// Whether the sorted list contains a value close to `v`.
pub(crate) fn contains_close(sorted: &[f64], v: f64) -> bool {
    let lo = sorted.partition_point(|&x| x < v && !close(x, v));
    lo < sorted.len() && close(sorted[lo], v)
}

/// Multiset intersection of two sorted lists up to [`MATCH_TOL`].
pub(crate) fn intersect(a: &[f64], b: &[f64]) -> Vec<f64> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < a.len() && j < b.len() {
        if close(a[i], b[j]) {
            out.push(0.5 * (a[i] + b[j]));
            i += 1;
            j += 1;
        } else if a[i] < b[j] {
            i += 1;
        } else {
            j += 1;
        }
    }
    out
}

/// Removes one occurrence of each value of `remove` from `row`, both sorted.
pub(crate) fn strip(row: &[f64], remove: &[f64]) -> Vec<f64> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < row.len() {
        if j < remove.len() && close(row[i], remove[j]) {
            i += 1;
            j += 1;
        } else if j < remove.len() && remove[j] < row[i] {
            j += 1;
        } else {
            out.push(row[i]);
            i += 1;
        }
    }
    out
}

/// Neighbour set, Voronoi domain and lattice points up to a fixed reach.
pub(crate) struct SearchContext {
    pub nset: NeighborSet,
    /// Origin first, then non-zero lattice points by increasing norm.
    pub lattice_points: Vec<Vec<f64>>,
}

impl SearchContext {
    pub fn new(nset: NeighborSet, reach: f64) -> Self {
        let n = nset.cell().dim();
        let mut lattice_points = vec![vec![0.0; n]];
        lattice_points.extend(nset.cell().lattice_points_within(reach));
        SearchContext { nset, lattice_points }
    }

    pub fn cell(&self) -> &VoronoiCell {
        self.nset.cell()
    }

    /// Sorted distances `|v - λ|` not exceeding `limit`.
    pub fn translate_distances(&self, v: &[f64], limit: f64) -> Vec<f64> {
        let mut d: Vec<f64> = self
            .lattice_points
            .iter()
            .map(|l| distance(v, l))
            .filter(|&d| d <= limit)
            .collect();
        d.sort_by(f64::total_cmp);
        d
    }

    /// Whether every distance `|v - λ|` up to `limit` occurs in `shared`.
    pub fn consistent(&self, v: &[f64], shared: &[f64], limit: f64) -> bool {
        self.lattice_points.iter().all(|l| {
            let d = distance(v, l);
            d > limit || contains_close(shared, d)
        })
    }

    /// Points `x` of the open domain whose distances to the lattice, up to
    /// `limit`, all occur in `shared`, where `shared[0] = |x|` and
    /// `shared[1]` is the distance to the nearest non-zero lattice point.
    pub fn candidates(&self, shared: &[f64], limit: f64) -> Vec<Vec<f64>> {
        let n = self.cell().dim();
        if shared.len() < n + 1 {
            return Vec::new();
        }
        let d0 = shared[0];
        let s1 = shared[1];
        let scale = self.cell().covering_radius().max(1e-300);
        let mut out: Vec<Vec<f64>> = Vec::new();
        let mut accept = |x: Vec<f64>| {
            if !self.cell().contains(&x, 1e-9 * scale) {
                return;
            }
            // the first lattice point used must be the nearest non-zero one
            if self.nset.points.iter().any(|p| {
                let d = distance(&x, p);
                d < s1 && !close(d, s1)
            }) {
                return;
            }
            if out.iter().any(|y| distance(y, &x) <= MATCH_TOL * scale) {
                return;
            }
            if self.consistent(&x, shared, limit) {
                out.push(x);
            }
        };
        // distinct values for the third sphere radius
        let mut radii: Vec<f64> = Vec::new();
        for &t in &shared[1..] {
            if radii.last().is_none_or(|&r| !close(r, t)) {
                radii.push(t);
            }
        }
        for p1 in &self.nset.points {
            let a1 = 0.5 * (d0 * d0 + norm2(p1) - s1 * s1);
            if n == 2 {
                let x0: Vec<f64> = p1.iter().map(|c| c * a1 / norm2(p1)).collect();
                let u = vec![-p1[1], p1[0]];
                for x in line_sphere(&x0, &u, d0) {
                    accept(x);
                }
                continue;
            }
            for p2 in &self.nset.points {
                let u = cross(p1, p2);
                if norm(&u) <= 1e-9 * norm(p1) * norm(p2) {
                    continue;
                }
                for &t in &radii {
                    let a2 = 0.5 * (d0 * d0 + norm2(p2) - t * t);
                    // point of the line x·p1 = a1, x·p2 = a2 in span(p1, p2)
                    let (g11, g12, g22) = (norm2(p1), dot(p1, p2), norm2(p2));
                    let det = g11 * g22 - g12 * g12;
                    let alpha = (a1 * g22 - a2 * g12) / det;
                    let beta = (a2 * g11 - a1 * g12) / det;
                    let x0: Vec<f64> = p1.iter().zip(p2).map(|(x, y)| alpha * x + beta * y).collect();
                    for x in line_sphere(&x0, &u, d0) {
                        accept(x);
                    }
                }
            }
        }
        out
    }
}

/// Intersections of the line `x0 + τu` (with `x0 ⟂ u`) and the sphere `|x| = r`.
fn line_sphere(x0: &[f64], u: &[f64], r: f64) -> Vec<Vec<f64>> {
    let rest = r * r - norm2(x0);
    let tol = MATCH_TOL * r * r;
    if rest < -tol {
        return Vec::new();
    }
    let tau = (rest.max(0.0) / norm2(u)).sqrt();
    let at = |s: f64| x0.iter().zip(u).map(|(a, b)| a + s * b).collect::<Vec<f64>>();
    if tau == 0.0 {
        vec![at(0.0)]
    } else {
        vec![at(tau), at(-tau)]
    }
}

/// Groups points into classes `{x, -x}` and returns one representative each.
pub(crate) fn sign_classes(points: &[Vec<f64>], tol: f64) -> Vec<Vec<f64>> {
    let mut reps: Vec<Vec<f64>> = Vec::new();
    for p in points {
        let minus: Vec<f64> = p.iter().map(|x| -x).collect();
        if !reps.iter().any(|r| distance(r, p) <= tol || distance(r, &minus) <= tol) {
            reps.push(p.clone());
        }
    }
    reps
}

/// `x` or `-x`, whichever has its first non-zero coordinate positive.
pub(crate) fn canonical_sign(x: &[f64]) -> Vec<f64> {
    let first = x.iter().find(|c| c.abs() > 1e-12).copied().unwrap_or(0.0);
    if first < 0.0 {
        x.iter().map(|c| -c).collect()
    } else {
        x.to_vec()
    }
}

#[cfg(test)]
mod tests {
    use super::super::neighbors::neighbor_set;
    use super::*;
    use crate::lattice::Lattice;

    #[test]
    fn list_helpers() {
        assert_eq!(strip(&[1.0, 1.5, 2.0, 2.0, 3.0], &[1.0, 2.0, 4.0]), vec![1.5, 2.0, 3.0]);
        assert_eq!(intersect(&[1.0, 1.0, 2.0], &[1.0, 2.0, 2.0]), vec![1.0, 2.0]);
        assert!(contains_close(&[1.0, 2.0, 3.0], 2.0 + 1e-9));
        assert!(!contains_close(&[1.0, 2.0, 3.0], 2.5));
        assert_eq!(canonical_sign(&[0.0, -1.0]), vec![0.0, 1.0]);
    }

    #[test]
    fn recovers_a_generic_point_up_to_sign() {
        for (basis, q) in [
            (vec![vec![1.0, 0.0], vec![0.31, 1.27]], vec![0.213, 0.377]),
            (
                vec![vec![1.0, 0.0, 0.0], vec![0.21, 1.13, 0.0], vec![0.17, 0.29, 1.41]],
                vec![0.231, -0.187, 0.352],
            ),
        ] {
            let lattice = Lattice::from_vectors(&basis).unwrap();
            let nset = neighbor_set(&lattice).unwrap();
            let r = nset.cell().covering_radius();
            let ctx = SearchContext::new(nset, 8.0 * r);
            let q = ctx.cell().reduce_point(&q);
            let list = ctx.translate_distances(&q, 4.0 * r);
            let found = ctx.candidates(&list, 4.0 * r);
            let classes = sign_classes(&found, 1e-6);
            assert_eq!(classes.len(), 1, "{found:?}");
            let minus: Vec<f64> = q.iter().map(|x| -x).collect();
            assert!(distance(&classes[0], &q) < 1e-6 || distance(&classes[0], &minus) < 1e-6);
        }
    }
}
