//! Voronoi domain of the origin in a 2D or 3D lattice.

use nalgebra::DMatrix;

use super::ReconstructError;
use crate::lattice::{dot, norm, Lattice};

/// Relative tolerance for treating two squared lengths as tied.
const TIE_TOL: f64 = 1e-9;

pub(crate) fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub(crate) fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a)
}

/// Greedy (Minkowski in dimensions ≤ 3) reduction: keep replacing a basis
/// vector by a shorter combination with the others until nothing improves.
pub fn reduce_basis(lattice: &Lattice) -> Vec<Vec<f64>> {
    let mut basis = lattice.vectors();
    let n = basis.len();
    let mut combos: Vec<Vec<i64>> = Vec::new();
    let mut c = vec![-1i64; n];
    loop {
        if c.iter().any(|&x| x != 0) {
            combos.push(c.clone());
        }
        let mut t = 0;
        while t < n && c[t] == 1 {
            c[t] = -1;
            t += 1;
        }
        if t == n {
            break;
        }
        c[t] += 1;
    }
    for _ in 0..1000 {
        basis.sort_by(|a, b| norm2(a).total_cmp(&norm2(b)));
        let mut improved = false;
        for i in 0..n {
            for combo in &combos {
                if combo[i] == 0 {
                    continue;
                }
                // b_i replaced by ±b_i + Σ_{j≠i} c_j b_j keeps the lattice
                let mut v = vec![0.0; n];
                for (j, b) in basis.iter().enumerate() {
                    for (x, y) in v.iter_mut().zip(b) {
                        *x += combo[j] as f64 * y;
                    }
                }
                if norm2(&v) < norm2(&basis[i]) * (1.0 - 1e-12) {
                    basis[i] = v;
                    improved = true;
                }
            }
        }
        if !improved {
            break;
        }
    }
    basis.sort_by(|a, b| norm2(a).total_cmp(&norm2(b)));
    basis
}

/// The open Voronoi domain `V(Λ;0)` described by its relevant vectors.
#[derive(Debug, Clone)]
pub struct VoronoiCell {
    lattice: Lattice,
    reduced: Lattice,
    relevant: Vec<Vec<f64>>,
    vertices: Vec<Vec<f64>>,
    covering_radius: f64,
}

impl VoronoiCell {
    pub fn new(lattice: &Lattice) -> Result<Self, ReconstructError> {
        let n = lattice.dim();
        if !(2..=3).contains(&n) {
            return Err(ReconstructError::UnsupportedDimension(n));
        }
        let reduced = Lattice::from_vectors(&reduce_basis(lattice))?;
        let mut last = None;
        for bound in [2i64, 3] {
            let relevant = relevant_vectors(&reduced, bound);
            let vertices = cell_vertices(&relevant, n);
            let volume = polytope_volume(&relevant, &vertices, n);
            let expected = lattice.volume();
            if (volume - expected).abs() <= 1e-6 * expected {
                let covering_radius = vertices.iter().map(|v| norm(v)).fold(0.0, f64::max);
                return Ok(VoronoiCell {
                    lattice: lattice.clone(),
                    reduced,
                    relevant,
                    vertices,
                    covering_radius,
                });
            }
            last = Some((expected, volume));
        }
        let (expected, found) = last.expect("loop ran");
        Err(ReconstructError::VoronoiCertificate { expected, found })
    }

    pub fn dim(&self) -> usize {
        self.lattice.dim()
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    /// Lattice vectors whose bisectors bound the domain (both signs included).
    pub fn relevant_vectors(&self) -> &[Vec<f64>] {
        &self.relevant
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn covering_radius(&self) -> f64 {
        self.covering_radius
    }

    /// Whether `q` lies in the open domain, at least `margin` away from every facet.
    pub fn contains(&self, q: &[f64], margin: f64) -> bool {
        self.relevant
            .iter()
            .all(|v| (norm2(v) / 2.0 - dot(q, v)) / norm(v) > margin)
    }

    /// Translates `x` by a lattice vector into the closed domain.
    pub fn reduce_point(&self, x: &[f64]) -> Vec<f64> {
        // start from the nearest point of the coarse fractional rounding
        let frac = self.reduced.to_fractional(x);
        let shift: Vec<i64> = frac.iter().map(|f| f.round() as i64).collect();
        let mut y = sub(x, &self.reduced.lattice_vector(&shift));
        // iterative slicer: each step strictly shortens y
        for _ in 0..10_000 {
            let worst = self
                .relevant
                .iter()
                .map(|v| (dot(&y, v) - norm2(v) / 2.0, v))
                .max_by(|a, b| a.0.total_cmp(&b.0))
                .expect("relevant vectors exist");
            if worst.0 <= 1e-12 * norm2(worst.1) {
                break;
            }
            y = sub(&y, worst.1);
        }
        y
    }

    /// Non-zero lattice vectors of norm at most `radius`, sorted by norm.
    pub fn lattice_points_within(&self, radius: f64) -> Vec<Vec<f64>> {
        let n = self.dim();
        let inv = self.reduced.inverse();
        let bounds: Vec<i64> = (0..n)
            .map(|t| {
                let row: f64 = inv.row(t).iter().map(|x| x * x).sum::<f64>().sqrt();
                (radius * row).floor() as i64 + 1
            })
            .collect();
        let mut out = Vec::new();
        let mut c: Vec<i64> = bounds.iter().map(|b| -b).collect();
        let limit = radius * radius * (1.0 + 1e-12);
        loop {
            if c.iter().any(|&x| x != 0) {
                let v = self.reduced.lattice_vector(&c);
                if norm2(&v) <= limit {
                    out.push(v);
                }
            }
            let mut t = 0;
            loop {
                if t == n {
                    out.sort_by(|a, b| {
                        norm2(a).total_cmp(&norm2(b)).then_with(|| crate::invariants::lex_cmp(a, b))
                    });
                    return out;
                }
                if c[t] < bounds[t] {
                    c[t] += 1;
                    break;
                }
                c[t] = -bounds[t];
                t += 1;
            }
        }
    }
}

/// Voronoi-relevant vectors: the strict minima (up to sign) of each non-zero
/// coset of `Λ/2Λ`, searched over coefficients in `[-bound, bound]ⁿ`.
fn relevant_vectors(reduced: &Lattice, bound: i64) -> Vec<Vec<f64>> {
    let n = reduced.dim();
    let classes = 1usize << n;
    let mut best: Vec<Vec<Vec<f64>>> = vec![Vec::new(); classes];
    let mut best_len = vec![f64::INFINITY; classes];
    let mut c = vec![-bound; n];
    loop {
        let class = c
            .iter()
            .enumerate()
            .fold(0usize, |acc, (t, x)| acc | ((x.rem_euclid(2) as usize) << t));
        if class != 0 {
            let v = reduced.lattice_vector(&c);
            let l = norm2(&v);
            if l < best_len[class] * (1.0 - TIE_TOL) {
                best_len[class] = l;
                best[class] = vec![v];
            } else if l <= best_len[class] * (1.0 + TIE_TOL) {
                best[class].push(v);
            }
        }
        let mut t = 0;
        loop {
            if t == n {
                let mut out = Vec::new();
                for group in best.into_iter().skip(1) {
                    // relevant only when the minimum is attained by a single ±v pair
                    if group.len() == 2 {
                        out.extend(group);
                    }
                }
                return out;
            }
            if c[t] < bound {
                c[t] += 1;
                break;
            }
            c[t] = -bound;
            t += 1;
        }
    }
}

fn solve(rows: &[&Vec<f64>], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = rows.len();
    let a = DMatrix::from_fn(n, n, |r, c| rows[r][c]);
    let scale = rows.iter().map(|r| norm(r)).product::<f64>();
    if a.determinant().abs() <= 1e-10 * scale {
        return None;
    }
    let b = nalgebra::DVector::from_column_slice(rhs);
    a.lu().solve(&b).map(|x| x.iter().copied().collect())
}

fn cell_vertices(relevant: &[Vec<f64>], n: usize) -> Vec<Vec<f64>> {
    let mut vertices: Vec<Vec<f64>> = Vec::new();
    let scale = relevant.iter().map(|v| norm(v)).fold(0.0, f64::max);
    let tol = 1e-9 * scale * scale;
    let m = relevant.len();
    let mut pick = |idx: &[usize]| {
        let rows: Vec<&Vec<f64>> = idx.iter().map(|&i| &relevant[i]).collect();
        let rhs: Vec<f64> = rows.iter().map(|v| norm2(v) / 2.0).collect();
        if let Some(x) = solve(&rows, &rhs) {
            if relevant.iter().all(|v| dot(&x, v) <= norm2(v) / 2.0 + tol)
                && !vertices.iter().any(|w| norm(&sub(w, &x)) <= 1e-9 * scale)
            {
                vertices.push(x);
            }
        }
    };
    for i in 0..m {
        for j in i + 1..m {
            if n == 2 {
                pick(&[i, j]);
            } else {
                for k in j + 1..m {
                    pick(&[i, j, k]);
                }
            }
        }
    }
    vertices
}

fn polytope_volume(relevant: &[Vec<f64>], vertices: &[Vec<f64>], n: usize) -> f64 {
    if vertices.len() < n + 1 {
        return 0.0;
    }
    let scale = relevant.iter().map(|v| norm(v)).fold(0.0, f64::max);
    let tol = 1e-9 * scale * scale;
    let mut volume = 0.0;
    for v in relevant {
        let on: Vec<&Vec<f64>> = vertices
            .iter()
            .filter(|x| (dot(x, v) - norm2(v) / 2.0).abs() <= tol)
            .collect();
        let height = norm(v) / 2.0;
        let measure = if n == 2 {
            if on.len() < 2 {
                0.0
            } else {
                // the facet is a segment; take its longest extent
                let mut best: f64 = 0.0;
                for a in &on {
                    for b in &on {
                        best = best.max(norm(&sub(a, b)));
                    }
                }
                best
            }
        } else {
            polygon_area(&on, v)
        };
        volume += measure * height / n as f64;
    }
    volume
}

pub(crate) fn cross(a: &[f64], b: &[f64]) -> Vec<f64> {
    vec![
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn polygon_area(points: &[&Vec<f64>], normal: &[f64]) -> f64 {
    if points.len() < 3 {
        return 0.0;
    }
    let count = points.len() as f64;
    let centroid: Vec<f64> = (0..3)
        .map(|t| points.iter().map(|p| p[t]).sum::<f64>() / count)
        .collect();
    let e1 = {
        let d = sub(points[0], &centroid);
        let l = norm(&d);
        d.iter().map(|x| x / l).collect::<Vec<_>>()
    };
    let nn = norm(normal);
    let unit_n: Vec<f64> = normal.iter().map(|x| x / nn).collect();
    let e2 = cross(&unit_n, &e1);
    let mut ordered: Vec<(f64, &Vec<f64>)> = points
        .iter()
        .map(|p| {
            let d = sub(p, &centroid);
            (dot(&d, &e2).atan2(dot(&d, &e1)), *p)
        })
        .collect();
    ordered.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut area = 0.0;
    for i in 0..ordered.len() {
        let a = sub(ordered[i].1, &centroid);
        let b = sub(ordered[(i + 1) % ordered.len()].1, &centroid);
        area += dot(&cross(&a, &b), &unit_n) / 2.0;
    }
    area.abs()
}

/// Covering radius `R(Λ)`: the largest distance from the origin to a vertex of `V(Λ;0)`.
pub fn covering_radius(lattice: &Lattice) -> Result<f64, ReconstructError> {
    Ok(VoronoiCell::new(lattice)?.covering_radius())
}
