//! Rebuilding a motif from a known lattice and the PDD of the set.

use log::debug;
use serde::{Deserialize, Serialize};

use super::neighbors::neighbor_set;
use super::search::{canonical_sign, intersect, sign_classes, strip, SearchContext};
use super::voronoi::sub;
use super::{Condition, ReconstructError, MATCH_TOL, VERIFY_TOL};
use crate::invariants::{pdd, PddMatrix};
use crate::lattice::{norm, Lattice, PeriodicSet};
use crate::metrics::emd;

/// One motif point placed during reconstruction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    /// Index of the PDD row, after expanding weights into `m` rows.
    pub row: usize,
    /// Cartesian position relative to the first point.
    pub point: Vec<f64>,
    /// Number of sign classes the sphere intersections produced.
    pub candidates: usize,
}

/// How a set was rebuilt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionTrace {
    pub placements: Vec<Placement>,
    /// EMD between the input PDD and the PDD of the rebuilt set.
    pub verification_emd: f64,
}

/// A rebuilt periodic set together with how it was obtained.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub set: PeriodicSet,
    pub trace: ReconstructionTrace,
}

/// Expands weighted rows into `m` unweighted rows.
fn expand_rows(pdd: &PddMatrix, m: usize) -> Result<Vec<Vec<f64>>, ReconstructError> {
    let mut rows = Vec::with_capacity(m);
    for (i, row) in pdd.rows().iter().enumerate() {
        let bad = || ReconstructError::WeightNotInteger {
            row: i,
            weight: row.weight.to_string(),
            m,
        };
        let scaled = row.weight.numer().checked_mul(m as u64).ok_or_else(bad)?;
        if scaled % row.weight.denom() != 0 {
            return Err(bad());
        }
        for _ in 0..scaled / row.weight.denom() {
            rows.push(row.distances.clone());
        }
    }
    Ok(rows)
}

/// Rebuilds a periodic set with lattice `lattice` and `m` motif points from
/// its PDD, up to isometry. The set must be distance-generic and `k` large
/// enough that every row reaches beyond twice the covering radius.
pub fn reconstruct_motif(
    lattice: &Lattice,
    m: usize,
    pdd_in: &PddMatrix,
) -> Result<Reconstruction, ReconstructError> {
    if m == 0 {
        return Err(ReconstructError::ZeroMotif);
    }
    let rows = expand_rows(pdd_in, m)?;
    let n = lattice.dim();
    let origin = vec![0.0; n];
    if m == 1 {
        return finish(lattice, vec![origin.clone()], vec![Placement { row: 0, point: origin, candidates: 1 }], pdd_in);
    }

    let nset = neighbor_set(lattice)?;
    let big_r = nset.cell().covering_radius();
    let required = 2.0 * big_r;
    let last = |r: &Vec<f64>| *r.last().expect("rows are non-empty");
    for (i, r) in rows.iter().enumerate() {
        if last(r) <= required {
            return Err(ReconstructError::InsufficientK { row: i, last: last(r), required });
        }
    }
    let reach = rows.iter().map(last).fold(0.0, f64::max);
    let ctx = SearchContext::new(nset, reach * (1.0 + MATCH_TOL) + 2.0 * big_r);

    // distances from a point to its own lattice translates occur in every row
    let lattice_lengths: Vec<f64> = ctx.lattice_points[1..]
        .iter()
        .map(|v| norm(v))
        .filter(|&d| d <= reach * (1.0 + MATCH_TOL))
        .collect();
    let stripped: Vec<Vec<f64>> = rows.iter().map(|r| strip(r, &lattice_lengths)).collect();
    let limit_of = |i: usize, j: usize| last(&rows[i]).min(last(&rows[j])) * (1.0 - MATCH_TOL);
    let pos_tol = MATCH_TOL * big_r.max(1.0);

    let mut points = vec![origin.clone()];
    let mut placements = vec![Placement { row: 0, point: origin, candidates: 1 }];
    for j in 1..m {
        let shared = intersect(&stripped[0], &stripped[j]);
        let found = ctx.candidates(&shared, limit_of(0, j));
        let classes = sign_classes(&found, pos_tol);
        debug!("row {j}: {} candidate classes", classes.len());
        let x = match classes.as_slice() {
            [] => return Err(ReconstructError::NoPlacement { row: j }),
            [x] => x.clone(),
            _ => {
                return Err(ReconstructError::Ambiguous {
                    row: j,
                    condition: Condition::C,
                    witnesses: classes,
                })
            }
        };
        let point = if points.len() == 1 {
            canonical_sign(&x)
        } else {
            let minus: Vec<f64> = x.iter().map(|c| -c).collect();
            let fits = |y: &[f64]| {
                (1..points.len()).all(|i| {
                    let row_i = placements[i].row;
                    let shared_ij = intersect(&stripped[row_i], &stripped[j]);
                    ctx.consistent(&sub(y, &points[i]), &shared_ij, limit_of(row_i, j))
                })
            };
            match (fits(&x), fits(&minus)) {
                (true, false) => x,
                (false, true) => minus,
                (false, false) => return Err(ReconstructError::NoPlacement { row: j }),
                (true, true) => {
                    return Err(ReconstructError::Ambiguous {
                        row: j,
                        condition: Condition::A,
                        witnesses: vec![x, minus],
                    })
                }
            }
        };
        placements.push(Placement { row: j, point: point.clone(), candidates: classes.len() });
        points.push(point);
    }
    finish(lattice, points, placements, pdd_in)
}

/// Builds the set and checks that its PDD matches the input.
fn finish(
    lattice: &Lattice,
    points: Vec<Vec<f64>>,
    placements: Vec<Placement>,
    pdd_in: &PddMatrix,
) -> Result<Reconstruction, ReconstructError> {
    let set = PeriodicSet::from_cartesian(lattice.clone(), &points)?;
    let rebuilt = pdd(&set, pdd_in.k(), 0.0)?;
    let (d, _) = emd(&rebuilt, pdd_in)?;
    if d > VERIFY_TOL {
        return Err(ReconstructError::Verification { emd: d });
    }
    Ok(Reconstruction { set, trace: ReconstructionTrace { placements, verification_emd: d } })
}
