//! Minimum spanning tree under EMD over candidate edges pruned by PPC.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{InvariantStore, PipelineError};
use crate::invariants::PddMatrix;
use crate::metrics::{amd_distance, emd};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MstEdge {
    pub label_a: String,
    pub label_b: String,
    pub emd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mst {
    /// Sorted by weight, then by labels.
    pub edges: Vec<MstEdge>,
    pub total_weight: f64,
    pub candidate_count: usize,
    /// Whether candidates were pruned, so the tree may not be the exact MST.
    pub approximate: bool,
    /// Edges added to join components the candidate graph left apart.
    pub bridging_edges: usize,
    /// Labels in node order, with optional PPC values.
    pub nodes: Vec<(String, Option<f64>)>,
}

#[derive(Serialize)]
struct GraphNode<'a> {
    id: usize,
    label: &'a str,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    properties: BTreeMap<&'static str, f64>,
}

#[derive(Serialize)]
struct GraphEdge {
    source: usize,
    target: usize,
    weight: f64,
}

#[derive(Serialize)]
struct Graph<'a> {
    directed: bool,
    approximate: bool,
    candidate_count: usize,
    total_weight: f64,
    nodes: Vec<GraphNode<'a>>,
    edges: Vec<GraphEdge>,
}

impl Mst {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["label_a", "label_b", "emd"])?;
        for e in &self.edges {
            w.write_record([e.label_a.as_str(), e.label_b.as_str(), &e.emd.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Node-link graph JSON for external graph drawing tools.
    pub fn to_graph_json(&self) -> String {
        let index: BTreeMap<&str, usize> =
            self.nodes.iter().enumerate().map(|(i, (l, _))| (l.as_str(), i)).collect();
        let graph = Graph {
            directed: false,
            approximate: self.approximate,
            candidate_count: self.candidate_count,
            total_weight: self.total_weight,
            nodes: self
                .nodes
                .iter()
                .enumerate()
                .map(|(id, (label, ppc))| GraphNode {
                    id,
                    label,
                    properties: ppc.iter().map(|&v| ("ppc", v)).collect(),
                })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|e| GraphEdge {
                    source: index[e.label_a.as_str()],
                    target: index[e.label_b.as_str()],
                    weight: e.emd,
                })
                .collect(),
        };
        serde_json::to_string_pretty(&graph).expect("graph serialises")
    }
}

struct DisjointSets {
    parent: Vec<usize>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        DisjointSets { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra.max(rb)] = ra.min(rb);
        true
    }
}

fn emd_edges(
    pairs: &[(usize, usize)],
    pdds: &[&PddMatrix],
    labels: &[&str],
) -> Result<Vec<(f64, usize, usize)>, PipelineError> {
    pairs
        .par_iter()
        .map(|&(i, j)| {
            emd(pdds[i], pdds[j]).map(|(d, _)| (d, i, j)).map_err(|source| PipelineError::Metric {
                a: labels[i].to_string(),
                b: labels[j].to_string(),
                source,
            })
        })
        .collect()
}

/// Kruskal over `edges`, adding accepted edges to `tree`; ties go to label order,
/// which equals index order because nodes are sorted by label.
fn kruskal(edges: &mut [(f64, usize, usize)], sets: &mut DisjointSets, tree: &mut Vec<(f64, usize, usize)>) {
    edges.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    for &(d, i, j) in edges.iter() {
        if sets.union(i, j) {
            tree.push((d, i, j));
        }
    }
}

/// Builds the MST of the graph joining each record to its `candidate_count`
/// nearest records by PPC difference, weighted by EMD. Records without a PPC
/// (finite sets) switch the ranking to AMD gaps for the whole store.
/// Components left apart are joined by their nearest cross-component EMD.
pub fn build_mst(store: &InvariantStore, candidate_count: usize) -> Result<Mst, PipelineError> {
    let n = store.len();
    if n < 2 {
        return Err(PipelineError::TooFewRecords { found: n, needed: 2 });
    }
    if candidate_count == 0 {
        return Err(PipelineError::ZeroCandidates);
    }
    let records = store.records();
    let labels: Vec<&str> = records.iter().map(|r| r.label.as_str()).collect();
    let pdds: Vec<&PddMatrix> = records.iter().map(|r| &r.pdd).collect();
    let ppcs: Option<Vec<f64>> = records.iter().map(|r| r.ppc).collect();
    if ppcs.is_none() {
        info!("some records have no PPC; ranking MST candidates by AMD gap");
    }

    let keys: Vec<Vec<(f64, usize)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut ranked: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| {
                    let key = match &ppcs {
                        Some(p) => (p[i] - p[j]).abs(),
                        None => amd_distance(&records[i].amd, &records[j].amd).unwrap_or(f64::INFINITY),
                    };
                    (key, j)
                })
                .collect();
            ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            ranked.truncate(candidate_count);
            ranked
        })
        .collect();
    let candidates: BTreeSet<(usize, usize)> = keys
        .iter()
        .enumerate()
        .flat_map(|(i, ranked)| ranked.iter().map(move |&(_, j)| (i.min(j), i.max(j))))
        .collect();
    let candidates: Vec<(usize, usize)> = candidates.into_iter().collect();
    info!("{} candidate edges for {n} records", candidates.len());

    let mut sets = DisjointSets::new(n);
    let mut tree = Vec::with_capacity(n - 1);
    let mut edges = emd_edges(&candidates, &pdds, &labels)?;
    kruskal(&mut edges, &mut sets, &mut tree);

    let mut bridging_edges = 0;
    if tree.len() < n - 1 {
        let before = tree.len();
        let computed: BTreeSet<(usize, usize)> = candidates.iter().copied().collect();
        let cross: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .filter(|&(i, j)| sets.find(i) != sets.find(j) && !computed.contains(&(i, j)))
            .collect();
        let mut cross_edges = emd_edges(&cross, &pdds, &labels)?;
        kruskal(&mut cross_edges, &mut sets, &mut tree);
        bridging_edges = tree.len() - before;
        info!("joined {} components with exact cross-component edges", bridging_edges + 1);
    }

    tree.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let edges: Vec<MstEdge> = tree
        .iter()
        .map(|&(d, i, j)| MstEdge { label_a: labels[i].to_string(), label_b: labels[j].to_string(), emd: d })
        .collect();
    Ok(Mst {
        total_weight: edges.iter().map(|e| e.emd).sum(),
        edges,
        candidate_count,
        approximate: candidate_count < n - 1,
        bridging_edges,
        nodes: records.iter().map(|r| (r.label.clone(), r.ppc)).collect(),
    })
}
