//! Earth Mover's Distance between PDDs and the AMD comparator.

mod transport;

pub use transport::{solve_transport, TransportError, TransportPlan};

use std::cmp::Ordering;

use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::invariants::{lex_cmp, weight_to_f64, AmdVector, PddMatrix};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("vectors have lengths {0} and {1}")]
    LengthMismatch(usize, usize),
    #[error("PDDs have k = {0} and k = {1}")]
    KMismatch(usize, usize),
    #[error("weight denominators overflow the integer transport problem")]
    WeightOverflow,
    #[error(transparent)]
    Transport(#[from] TransportError),
}

/// L∞ distance between two distance rows.
pub fn row_distance(a: &[f64], b: &[f64]) -> Result<f64, MetricError> {
    if a.len() != b.len() {
        return Err(MetricError::LengthMismatch(a.len(), b.len()));
    }
    Ok(linf(a, b))
}

fn linf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}

/// One transported mass `f` from row `i` of the first PDD to row `j` of the second.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowEntry {
    pub i: usize,
    pub j: usize,
    pub f: f64,
}

/// An optimal transport plan witnessing an EMD value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Flow {
    pub entries: Vec<FlowEntry>,
    pub cost: f64,
}

impl Flow {
    pub fn total(&self) -> f64 {
        self.entries.iter().map(|e| e.f).sum()
    }

    /// Recomputes `Σ f_ij · |R_i − R_j|∞` from the entries.
    pub fn recompute_cost(&self, p: &PddMatrix, q: &PddMatrix) -> f64 {
        self.entries
            .iter()
            .map(|e| e.f * linf(&p.rows()[e.i].distances, &q.rows()[e.j].distances))
            .sum()
    }
}

fn argument_order(p: &PddMatrix, q: &PddMatrix) -> Ordering {
    p.len().cmp(&q.len()).then_with(|| {
        p.rows()
            .iter()
            .zip(q.rows())
            .map(|(a, b)| a.weight.cmp(&b.weight).then_with(|| lex_cmp(&a.distances, &b.distances)))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    })
}

/// Exact EMD between two PDDs under the L∞ ground distance.
pub fn emd(p: &PddMatrix, q: &PddMatrix) -> Result<(f64, Flow), MetricError> {
    if p.k() != q.k() {
        return Err(MetricError::KMismatch(p.k(), q.k()));
    }
    // the solver's pivoting tolerance could leave rounding-sized cost when
    // nearly equal rows trade mass, so identical inputs take the identity plan
    if p == q {
        let entries = p
            .rows()
            .iter()
            .enumerate()
            .map(|(i, r)| FlowEntry { i, j: i, f: weight_to_f64(r.weight) })
            .collect();
        return Ok((0.0, Flow { entries, cost: 0.0 }));
    }
    // a fixed argument order makes emd(p, q) and emd(q, p) agree bit for bit
    if argument_order(p, q) == Ordering::Greater {
        let (d, flow) = emd(q, p)?;
        let mut entries: Vec<FlowEntry> =
            flow.entries.into_iter().map(|e| FlowEntry { i: e.j, j: e.i, f: e.f }).collect();
        entries.sort_by_key(|e| (e.i, e.j));
        return Ok((d, Flow { entries, cost: flow.cost }));
    }
    let scale = num_integer::lcm(p.common_denominator(), q.common_denominator());
    let masses = |pdd: &PddMatrix| -> Result<Vec<u64>, MetricError> {
        pdd.rows()
            .iter()
            .map(|r| {
                let per = scale / r.weight.denom();
                r.weight.numer().checked_mul(per).ok_or(MetricError::WeightOverflow)
            })
            .collect()
    };
    let (supply, demand) = (masses(p)?, masses(q)?);
    let mut cost = Vec::with_capacity(p.len() * q.len());
    for a in p.rows() {
        for b in q.rows() {
            cost.push(linf(&a.distances, &b.distances));
        }
    }
    let plan = solve_transport(&supply, &demand, &cost)?;
    let total = scale.to_f64().expect("u64 converts to f64");
    let entries: Vec<FlowEntry> = plan
        .flows
        .iter()
        .map(|&(i, j, f)| FlowEntry { i, j, f: f as f64 / total })
        .collect();
    let distance = plan.cost / total;
    Ok((distance, Flow { entries, cost: distance }))
}

/// L∞ distance between AMD vectors; a lower bound for the EMD of the PDDs.
pub fn amd_distance(a: &AmdVector, b: &AmdVector) -> Result<f64, MetricError> {
    row_distance(a.values(), b.values())
}
