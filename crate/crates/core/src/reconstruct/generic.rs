//! Checking whether a periodic set is distance-generic.
//!
//! With the motif reduced into the Voronoi domain around one of its points,
//! the set is generic when
//! (a) no two non-zero motif points are orthogonal,
//! (b) distinct difference vectors `p_i - p_j + λ` up to twice the covering
//!     radius have distinct lengths, and no length is twice another, apart
//!     from the forced coincidences of `±` pairs and lattice multiples, and
//! (c) every motif point is fixed up to sign by its distances to the lattice.

use std::collections::BTreeSet;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::neighbors::neighbor_set;
use super::search::{close, sign_classes, SearchContext};
use super::voronoi::{add, sub};
use super::{ReconstructError, MATCH_TOL};
use crate::lattice::{distance, dot, norm, PeriodicSet};

/// Reported violations per condition are capped at this many witnesses.
const MAX_WITNESSES: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Condition {
    A,
    B,
    C,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self {
            Condition::A => "a",
            Condition::B => "b",
            Condition::C => "c",
        };
        write!(f, "({c})")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub condition: Condition,
    /// Cartesian vectors exhibiting the violation.
    pub witness: Vec<Vec<f64>>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenericityReport {
    pub is_generic: bool,
    pub violations: Vec<Violation>,
}

/// A difference vector `p_i - p_j + λ`.
struct Entry {
    vec: Vec<f64>,
    len: f64,
    i: usize,
    j: usize,
}

impl Entry {
    fn is_lattice(&self) -> bool {
        self.i == self.j
    }
}

fn neg(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| -x).collect()
}

/// Checks conditions (a), (b) and (c) for a 2D or 3D periodic set.
pub fn check_distance_generic(set: &PeriodicSet) -> Result<GenericityReport, ReconstructError> {
    let nset = neighbor_set(set.lattice())?;
    let big_r = nset.cell().covering_radius();
    let ctx = SearchContext::new(nset, 6.0 * big_r);
    let cell = ctx.cell();
    let pos_tol = MATCH_TOL * big_r.max(1.0);

    let cart = set.to_cartesian();
    let pts: Vec<Vec<f64>> = cart.iter().map(|p| cell.reduce_point(&sub(p, &cart[0]))).collect();
    let m = pts.len();
    let mut violations = Vec::new();

    // (a) and (c) depend on which point sits at the origin; both are checked
    // for every choice, using the reduced differences p_j - p_i
    let mut diffs: Vec<(usize, usize, Vec<f64>)> = Vec::new();
    for i in 0..m {
        for j in 0..m {
            if i != j {
                diffs.push((i, j, cell.reduce_point(&sub(&pts[j], &pts[i]))));
            }
        }
    }

    let mut a_count = 0;
    for o in 0..m {
        let from_o: Vec<&Vec<f64>> = diffs.iter().filter(|d| d.0 == o).map(|d| &d.2).collect();
        for (s, p) in from_o.iter().enumerate() {
            for q in &from_o[s + 1..] {
                if dot(p, q).abs() <= MATCH_TOL * norm(p) * norm(q) && a_count < MAX_WITNESSES {
                    a_count += 1;
                    violations.push(Violation {
                        condition: Condition::A,
                        witness: vec![p.to_vec(), q.to_vec()],
                        detail: format!("points are orthogonal with point {o} at the origin"),
                    });
                }
            }
        }
    }

    violations.extend(condition_b(&ctx, &pts, big_r));

    // p_j - p_i and p_i - p_j give the same distance list, so unordered pairs suffice
    let c_found: Vec<Violation> = diffs
        .par_iter()
        .filter(|d| d.0 < d.1)
        .filter_map(|(i, j, q)| {
            if !cell.contains(q, 1e-9 * big_r) {
                return Some(Violation {
                    condition: Condition::C,
                    witness: vec![q.clone()],
                    detail: format!("p{j} - p{i} lies on the boundary of the Voronoi domain"),
                });
            }
            let limit = 4.0 * big_r;
            let list = ctx.translate_distances(q, limit);
            let found = ctx.candidates(&list, limit);
            let extra: Vec<Vec<f64>> = sign_classes(&found, pos_tol)
                .into_iter()
                .filter(|x| distance(x, q) > pos_tol && distance(x, &neg(q)) > pos_tol)
                .collect();
            if extra.is_empty() {
                return None;
            }
            let mut witness = vec![q.clone()];
            witness.extend(extra);
            Some(Violation {
                condition: Condition::C,
                witness,
                detail: format!("distances of p{j} - p{i} to the lattice admit other positions"),
            })
        })
        .collect();
    violations.extend(c_found.into_iter().take(MAX_WITNESSES));

    Ok(GenericityReport { is_generic: violations.is_empty(), violations })
}

fn condition_b(ctx: &SearchContext, pts: &[Vec<f64>], big_r: f64) -> Vec<Violation> {
    let bound = 2.0 * big_r * (1.0 + MATCH_TOL);
    let mut entries: Vec<Entry> = Vec::new();
    for (i, p) in pts.iter().enumerate() {
        for (j, q) in pts.iter().enumerate() {
            let base = sub(p, q);
            for l in &ctx.lattice_points {
                let vec = add(&base, l);
                let len = norm(&vec);
                if len > 0.0 && len <= bound {
                    entries.push(Entry { vec, len, i, j });
                }
            }
        }
    }
    entries.sort_by(|a, b| a.len.total_cmp(&b.len));
    let lens: Vec<f64> = entries.iter().map(|e| e.len).collect();
    let vec_tol = MATCH_TOL * big_r.max(1.0);
    let same = |a: &[f64], b: &[f64]| distance(a, b) <= vec_tol;

    let mut seen: BTreeSet<(i64, i64, u8)> = BTreeSet::new();
    let mut out = Vec::new();
    let mut report = |a: &Entry, b: &Entry, ratio: u8, detail: String| {
        let key = ((a.len / vec_tol).round() as i64, (b.len / vec_tol).round() as i64, ratio);
        if out.len() < MAX_WITNESSES && seen.insert(key) {
            out.push(Violation {
                condition: Condition::B,
                witness: vec![a.vec.clone(), b.vec.clone()],
                detail,
            });
        }
    };

    for (s, a) in entries.iter().enumerate() {
        // equal lengths
        for b in entries[s + 1..].iter().take_while(|b| close(a.len, b.len)) {
            let forced = (same(&a.vec, &b.vec) || same(&a.vec, &neg(&b.vec)))
                && (a.is_lattice()
                    || (a.i == b.i && a.j == b.j)
                    || (a.i == b.j && a.j == b.i));
            if !forced {
                report(a, b, 1, format!("|p{}-p{}+λ| = |p{}-p{}+μ| = {}", a.i, a.j, b.i, b.j, a.len));
            }
        }
        // one length twice another
        let half = a.len / 2.0;
        let lo = lens.partition_point(|&x| x < half && !close(x, half));
        for b in entries[lo..].iter().take_while(|b| close(b.len, half)) {
            let doubled: Vec<f64> = b.vec.iter().map(|x| 2.0 * x).collect();
            let forced = b.is_lattice() && (same(&a.vec, &doubled) || same(&a.vec, &neg(&doubled)));
            if !forced {
                report(
                    a,
                    b,
                    2,
                    format!("|p{}-p{}+λ| = {} is twice |p{}-p{}+μ|", a.i, a.j, a.len, b.i, b.j),
                );
            }
        }
    }
    out
}
