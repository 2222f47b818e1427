//! Near-duplicate detection: AMD gaps filter, EMD confirms.

use std::io::Write;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{InvariantStore, PipelineError};
use crate::metrics::{amd_distance, emd};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DuplicatePair {
    pub label_a: String,
    pub label_b: String,
    pub amd_gap: f64,
    pub emd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DuplicateReport {
    /// Effective AMD threshold, never below the EMD threshold.
    pub amd_threshold: f64,
    pub emd_threshold: f64,
    /// Pairs passing the AMD filter, for which an EMD was computed.
    pub candidates: usize,
    /// Sorted by EMD, then by labels.
    pub pairs: Vec<DuplicatePair>,
}

impl DuplicateReport {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["label_a", "label_b", "amd_gap", "emd"])?;
        for p in &self.pairs {
            w.write_record([
                p.label_a.as_str(),
                p.label_b.as_str(),
                &p.amd_gap.to_string(),
                &p.emd.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }
}

fn check_threshold(t: f64) -> Result<f64, PipelineError> {
    if t.is_finite() && t >= 0.0 {
        Ok(t)
    } else {
        Err(PipelineError::BadThreshold(t))
    }
}

/// Reports all pairs with EMD at most `emd_threshold`.
///
/// Since the AMD gap never exceeds the EMD, filtering by
/// `amd_gap ≤ amd_threshold` loses no pair as long as
/// `amd_threshold ≥ emd_threshold`; a smaller AMD threshold is raised to the
/// EMD threshold so that the scan stays exhaustive.
pub fn scan_duplicates(
    store: &InvariantStore,
    amd_threshold: f64,
    emd_threshold: f64,
) -> Result<DuplicateReport, PipelineError> {
    let mut amd_threshold = check_threshold(amd_threshold)?;
    let emd_threshold = check_threshold(emd_threshold)?;
    if store.is_empty() {
        return Err(PipelineError::TooFewRecords { found: 0, needed: 1 });
    }
    if amd_threshold < emd_threshold {
        warn!("raising the AMD threshold {amd_threshold} to the EMD threshold {emd_threshold}");
        amd_threshold = emd_threshold;
    }
    let records = store.records();
    let n = records.len();

    // stage 1: AMD gaps over all pairs, one block per first index
    let passed: Vec<(usize, usize, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut out = Vec::new();
            for j in i + 1..n {
                let gap = amd_distance(&records[i].amd, &records[j].amd).map_err(|source| {
                    PipelineError::Metric {
                        a: records[i].label.clone(),
                        b: records[j].label.clone(),
                        source,
                    }
                })?;
                if gap <= amd_threshold {
                    out.push((i, j, gap));
                }
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>, PipelineError>>()?
        .into_iter()
        .flatten()
        .collect();
    info!("{} of {} pairs pass the AMD filter", passed.len(), n * (n - 1) / 2);

    // stage 2: exact EMD for the survivors
    let mut pairs: Vec<DuplicatePair> = passed
        .par_iter()
        .map(|&(i, j, gap)| {
            let (a, b) = (records[i], records[j]);
            let (d, _) = emd(&a.pdd, &b.pdd).map_err(|source| PipelineError::Metric {
                a: a.label.clone(),
                b: b.label.clone(),
                source,
            })?;
            Ok((d <= emd_threshold).then(|| DuplicatePair {
                label_a: a.label.clone(),
                label_b: b.label.clone(),
                amd_gap: gap,
                emd: d,
            }))
        })
        .collect::<Result<Vec<_>, PipelineError>>()?
        .into_iter()
        .flatten()
        .collect();
    pairs.sort_by(|x, y| {
        x.emd
            .total_cmp(&y.emd)
            .then_with(|| x.label_a.cmp(&y.label_a))
            .then_with(|| x.label_b.cmp(&y.label_b))
    });
    Ok(DuplicateReport { amd_threshold, emd_threshold, candidates: passed.len(), pairs })
}
