//! Pointwise distance distributions, average minimum distances and the
//! point packing coefficient.

mod codec;

pub use codec::{
    decode_record, encode_amd, encode_pdd, read_amd_csv, read_pdd_csv, write_amd_csv,
    write_pdd_csv, CodecError, Record,
};

use std::cmp::Ordering;

use num_rational::Ratio;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{unit_ball_volume, PeriodicSet, PointSetRef};
use crate::nnsearch::{neighbor_distances, SearchError};

/// Exact row weight.
pub type Weight = Ratio<u64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InvariantError {
    #[error("PDD has no rows")]
    Empty,
    #[error("row {row} has {found} distances, expected k = {k}")]
    RaggedRow { row: usize, found: usize, k: usize },
    #[error("row {row} has weight {weight} outside (0,1]")]
    BadWeight { row: usize, weight: Weight },
    #[error("weights sum to {0}, not 1")]
    WeightSum(Weight),
    #[error("row {0} is not non-decreasing")]
    UnsortedRow(usize),
    #[error("row {0} contains a negative or non-finite distance")]
    BadDistance(usize),
    #[error("row {0} does not strictly precede the next row lexicographically")]
    RowOrder(usize),
    #[error("collapse tolerance must be finite and non-negative, got {0}")]
    BadTolerance(f64),
    #[error(transparent)]
    Search(#[from] SearchError),
}

/// Lexicographic order on distance vectors.
pub fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    a.len().cmp(&b.len())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PddRow {
    #[serde(with = "weight_serde")]
    pub weight: Weight,
    pub distances: Vec<f64>,
}

/// A weighted, lexicographically ordered matrix of neighbour distances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPdd", into = "RawPdd")]
pub struct PddMatrix {
    k: usize,
    rows: Vec<PddRow>,
}

#[derive(Serialize, Deserialize)]
struct RawPdd {
    k: usize,
    rows: Vec<PddRow>,
}

impl TryFrom<RawPdd> for PddMatrix {
    type Error = InvariantError;
    fn try_from(raw: RawPdd) -> Result<Self, Self::Error> {
        let pdd = PddMatrix::new(raw.rows)?;
        if pdd.k != raw.k {
            return Err(InvariantError::RaggedRow { row: 0, found: pdd.k, k: raw.k });
        }
        Ok(pdd)
    }
}

impl From<PddMatrix> for RawPdd {
    fn from(p: PddMatrix) -> Self {
        RawPdd { k: p.k, rows: p.rows }
    }
}

impl PddMatrix {
    /// Validates rows that are already collapsed and sorted.
    pub fn new(rows: Vec<PddRow>) -> Result<Self, InvariantError> {
        let k = rows.first().ok_or(InvariantError::Empty)?.distances.len();
        let mut total = Weight::zero();
        for (i, row) in rows.iter().enumerate() {
            if row.distances.len() != k {
                return Err(InvariantError::RaggedRow { row: i, found: row.distances.len(), k });
            }
            if row.weight.is_zero() || row.weight > Weight::one() {
                return Err(InvariantError::BadWeight { row: i, weight: row.weight });
            }
            if row.distances.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
                return Err(InvariantError::BadDistance(i));
            }
            if row.distances.windows(2).any(|w| w[0] > w[1]) {
                return Err(InvariantError::UnsortedRow(i));
            }
            total += row.weight;
        }
        if total != Weight::one() {
            return Err(InvariantError::WeightSum(total));
        }
        for (i, w) in rows.windows(2).enumerate() {
            if lex_cmp(&w[0].distances, &w[1].distances) != Ordering::Less {
                return Err(InvariantError::RowOrder(i));
            }
        }
        Ok(PddMatrix { k, rows })
    }

    /// Collapses and sorts `m` equally weighted rows; rows within `collapse_tol`
    /// in L∞ are grouped (exact equality when the tolerance is 0).
    pub fn from_rows(rows: Vec<Vec<f64>>, collapse_tol: f64) -> Result<Self, InvariantError> {
        if !(collapse_tol.is_finite() && collapse_tol >= 0.0) {
            return Err(InvariantError::BadTolerance(collapse_tol));
        }
        if rows.is_empty() {
            return Err(InvariantError::Empty);
        }
        let m = rows.len() as u64;
        let groups = if collapse_tol == 0.0 {
            group_exact(rows)
        } else {
            group_within(rows, collapse_tol)
        };
        let mut weighted: Vec<PddRow> = groups
            .into_iter()
            .map(|(distances, count)| PddRow { weight: Weight::new(count, m), distances })
            .collect();
        weighted.sort_by(|a, b| lex_cmp(&a.distances, &b.distances));
        // averaging can make two groups coincide; merge them so the order stays strict
        let mut merged: Vec<PddRow> = Vec::with_capacity(weighted.len());
        for row in weighted {
            match merged.last_mut() {
                Some(last) if last.distances == row.distances => last.weight += row.weight,
                _ => merged.push(row),
            }
        }
        PddMatrix::new(merged)
    }

    /// Builds a matrix from arbitrary weighted rows, merging identical rows.
    pub fn from_weighted_rows(rows: Vec<PddRow>) -> Result<Self, InvariantError> {
        let mut rows = rows;
        rows.sort_by(|a, b| lex_cmp(&a.distances, &b.distances));
        let mut merged: Vec<PddRow> = Vec::with_capacity(rows.len());
        for row in rows {
            match merged.last_mut() {
                Some(last) if last.distances == row.distances => last.weight += row.weight,
                _ => merged.push(row),
            }
        }
        PddMatrix::new(merged)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn rows(&self) -> &[PddRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn weights_f64(&self) -> Vec<f64> {
        self.rows.iter().map(|r| weight_to_f64(r.weight)).collect()
    }

    /// The first `k` columns, re-collapsed.
    pub fn truncated(&self, k: usize) -> Result<Self, InvariantError> {
        PddMatrix::from_weighted_rows(
            self.rows
                .iter()
                .map(|r| PddRow { weight: r.weight, distances: r.distances[..k.min(self.k)].to_vec() })
                .collect(),
        )
    }

    /// Least common denominator of the weights.
    pub fn common_denominator(&self) -> u64 {
        self.rows
            .iter()
            .fold(1u64, |acc, r| num_integer::lcm(acc, *r.weight.denom()))
    }
}

pub fn weight_to_f64(w: Weight) -> f64 {
    *w.numer() as f64 / *w.denom() as f64
}

fn group_exact(mut rows: Vec<Vec<f64>>) -> Vec<(Vec<f64>, u64)> {
    rows.sort_by(|a, b| lex_cmp(a, b));
    let mut out: Vec<(Vec<f64>, u64)> = Vec::new();
    for row in rows {
        match out.last_mut() {
            Some((last, count)) if *last == row => *count += 1,
            _ => out.push((row, 1)),
        }
    }
    out
}

fn group_within(rows: Vec<Vec<f64>>, tol: f64) -> Vec<(Vec<f64>, u64)> {
    let n = rows.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut by_first: Vec<usize> = (0..n).collect();
    let first = |i: usize| rows[i].first().copied().unwrap_or(0.0);
    by_first.sort_by(|&a, &b| first(a).total_cmp(&first(b)).then(a.cmp(&b)));
    for (pos, &i) in by_first.iter().enumerate() {
        for &j in &by_first[pos + 1..] {
            if first(j) - first(i) > tol {
                break;
            }
            let close = rows[i].iter().zip(&rows[j]).all(|(a, b)| (a - b).abs() <= tol);
            if close {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut members: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let r = find(&mut parent, i);
        members.entry(r).or_default().push(i);
    }
    members
        .into_values()
        .map(|idx| {
            let k = rows[idx[0]].len();
            let mut mean = vec![0.0; k];
            for &i in &idx {
                for (acc, x) in mean.iter_mut().zip(&rows[i]) {
                    *acc += x;
                }
            }
            for x in &mut mean {
                *x /= idx.len() as f64;
            }
            (mean, idx.len() as u64)
        })
        .collect()
}

/// Computes `PDD(S;k)`.
pub fn pdd<'a>(
    set: impl Into<PointSetRef<'a>>,
    k: usize,
    collapse_tol: f64,
) -> Result<PddMatrix, InvariantError> {
    let d = neighbor_distances(set, k)?;
    PddMatrix::from_rows(d.into_rows(), collapse_tol)
}

/// Weighted column means of a PDD.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmdVector {
    values: Vec<f64>,
}

impl AmdVector {
    pub fn new(values: Vec<f64>) -> Self {
        AmdVector { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn k(&self) -> usize {
        self.values.len()
    }
}

pub fn amd(pdd: &PddMatrix) -> AmdVector {
    let mut values = vec![0.0; pdd.k()];
    for row in pdd.rows() {
        let w = weight_to_f64(row.weight);
        for (v, d) in values.iter_mut().zip(&row.distances) {
            *v += w * d;
        }
    }
    AmdVector { values }
}

/// Point packing coefficient `(Vol[U] / (m·Vₙ))^(1/n)`.
pub fn ppc(set: &PeriodicSet) -> f64 {
    let n = set.dim();
    let vol = set.lattice().volume();
    (vol / (set.len() as f64 * unit_ball_volume(n))).powf(1.0 / n as f64)
}

/// Parses a weight written as `a/b` or as a decimal.
pub fn parse_weight(text: &str) -> Option<Weight> {
    let text = text.trim();
    if let Some((a, b)) = text.split_once('/') {
        let (a, b) = (a.trim().parse::<u64>().ok()?, b.trim().parse::<u64>().ok()?);
        return (b != 0).then(|| Weight::new(a, b));
    }
    let x: f64 = text.parse().ok()?;
    rational_near(x, 1e-12, 1_000_000_000)
}

/// Best rational approximation of `x ∈ [0,1]` within `tol` and below `max_den`,
/// by continued-fraction convergents.
fn rational_near(x: f64, tol: f64, max_den: u64) -> Option<Weight> {
    if !(0.0..=1.0).contains(&x) {
        return None;
    }
    let (mut h0, mut h1) = (0u64, 1u64);
    let (mut k0, mut k1) = (1u64, 0u64);
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        if a > u32::MAX as f64 {
            break;
        }
        let a = a as u64;
        let h2 = a.checked_mul(h1)?.checked_add(h0)?;
        let k2 = a.checked_mul(k1)?.checked_add(k0)?;
        if k2 > max_den {
            break;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        if (h1 as f64 / k1 as f64 - x).abs() <= tol {
            return Some(Weight::new(h1, k1));
        }
        let frac = r - a as f64;
        if frac == 0.0 {
            break;
        }
        r = 1.0 / frac;
    }
    (k1 != 0 && (h1 as f64 / k1 as f64 - x).abs() <= tol).then(|| Weight::new(h1, k1))
}

mod weight_serde {
    use super::{parse_weight, Weight};
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(w: &Weight, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{}/{}", w.numer(), w.denom()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Weight, D::Error> {
        let text = String::deserialize(d)?;
        parse_weight(&text).ok_or_else(|| D::Error::custom(format!("bad weight {text:?}")))
    }
}
