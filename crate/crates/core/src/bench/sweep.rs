//! Cartesian parameter sweeps over flow, STA and classifier settings.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{cross_validate, describe_dataset, samples_from_rows, Action, BenchError, ConfusionMatrix, DatasetManifest, DescribeOptions, DescribedDataset};
use crate::flow::FlowAlgorithm;
use crate::learn::ClassifierConfig;
use crate::sta::StaParams;

/// Every `(m, n, k1, k2)` combination, magnitude-weighted, in nested order.
pub fn sta_grid(ms: &[usize], ns: &[usize], k1s: &[usize], k2s: &[usize]) -> Vec<StaParams> {
    let mut out = Vec::new();
    for &m in ms {
        for &n in ns {
            for &k1 in k1s {
                for &k2 in k2s {
                    out.push(StaParams::new(m, n, k1, k2));
                }
            }
        }
    }
    out
}

/// m ∈ {3, 6}, n ∈ {6, 8}, k1 ∈ {4, 5, 8}, k2 ∈ {5, 8}: 24 settings.
pub fn standard_sta_grid() -> Vec<StaParams> {
    sta_grid(&[3, 6], &[6, 8], &[4, 5, 8], &[5, 8])
}

/// [`standard_sta_grid`] plus the same sizes with columns and rows swapped
/// (which includes the 8 × 6 grid), without duplicates: 42 settings.
pub fn union_sta_grid() -> Vec<StaParams> {
    let mut out = standard_sta_grid();
    for p in sta_grid(&[6, 8], &[3, 6], &[4, 5, 8], &[5, 8]) {
        if !out.contains(&p) {
            out.push(p);
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub flow: FlowAlgorithm,
    pub sta: StaParams,
    pub classifier: ClassifierConfig,
    pub accuracy: f64,
    pub confusion: ConfusionMatrix,
    /// Sequences without a usable frame pair, left out of the evaluation.
    pub skipped: Vec<String>,
}

/// Evaluates every classifier on every grid of an already described dataset.
pub fn sweep_described(
    flow: &FlowAlgorithm,
    described: &DescribedDataset,
    classifiers: &[ClassifierConfig],
    seed: u64,
    jobs: usize,
) -> Result<Vec<SweepRow>, BenchError> {
    if classifiers.is_empty() {
        return Err(BenchError::EmptyGrid("classifier"));
    }
    let skipped: Vec<String> = described.skipped.iter().map(|s| s.id.clone()).collect();
    let mut rows = Vec::new();
    for (sta, descriptor_rows) in described.params.iter().zip(&described.rows) {
        let samples = samples_from_rows(descriptor_rows)?;
        for classifier in classifiers {
            let confusion = cross_validate(&samples, &Action::headings(), classifier, seed, jobs)?;
            rows.push(SweepRow {
                flow: flow.clone(),
                sta: *sta,
                classifier: classifier.clone(),
                accuracy: confusion.accuracy()?,
                confusion,
                skipped: skipped.clone(),
            });
        }
    }
    Ok(rows)
}

/// Cross-validated accuracy of every flow × STA × classifier combination,
/// best first. Ties keep grid order. Each flow setting runs one flow pass
/// shared by all STA settings.
pub fn sweep(
    manifest: &DatasetManifest,
    flows: &[FlowAlgorithm],
    stas: &[StaParams],
    classifiers: &[ClassifierConfig],
    options: &DescribeOptions,
    seed: u64,
    jobs: usize,
) -> Result<Vec<SweepRow>, BenchError> {
    if flows.is_empty() {
        return Err(BenchError::EmptyGrid("flow"));
    }
    if stas.is_empty() {
        return Err(BenchError::EmptyGrid("STA"));
    }
    if classifiers.is_empty() {
        return Err(BenchError::EmptyGrid("classifier"));
    }
    let mut rows = Vec::new();
    for flow in flows {
        let described = describe_dataset(manifest, flow, stas, options, jobs)?;
        rows.extend(sweep_described(flow, &described, classifiers, seed, jobs)?);
    }
    rows.sort_by(|a, b| b.accuracy.total_cmp(&a.accuracy));
    Ok(rows)
}

/// One line per row: rank, flow, grid, classifier, accuracy and counts.
pub fn write_report_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| BenchError::malformed("report", e.to_string());
    w.write_record(["rank", "flow", "m", "n", "k1", "k2", "weighted", "classifier", "accuracy", "correct", "total", "skipped"])
        .map_err(csv_err)?;
    for (i, r) in rows.iter().enumerate() {
        w.write_record([
            (i + 1).to_string(),
            r.flow.label(),
            r.sta.m.to_string(),
            r.sta.n.to_string(),
            r.sta.k1.to_string(),
            r.sta.k2.to_string(),
            r.sta.weighted.to_string(),
            r.classifier.label(),
            format!("{:.6}", r.accuracy),
            r.confusion.correct().to_string(),
            r.confusion.total().to_string(),
            r.skipped.len().to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
