//! Whole-sequence descriptors: flow for every annotated frame pair, grid
//! vectors inside the frame's bounding box, then STA aggregation.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{load_annotations, with_jobs, BenchError, DatasetManifest, SequenceRecord};
use crate::flow::FlowAlgorithm;
use crate::raster::{load_pgm, GrayFrame};
use crate::sta::{grid_vector, sta1, BoundingBox, Descriptor, DescriptorKind, DescriptorRow, GridVector, Sta2Accumulator, StaError, StaParams};

/// `dir/frame_000042.pgm` for frame 42.
pub fn frame_path(dir: &Path, index: usize) -> PathBuf {
    dir.join(format!("frame_{index:06}.pgm"))
}

/// Random access to the frames of one sequence (1-indexed).
pub trait FrameSource {
    fn frame_count(&self) -> usize;
    fn frame(&self, index: usize) -> Result<GrayFrame, BenchError>;
}

/// Frames stored as numbered PGM files.
pub struct DirectorySource {
    pub dir: PathBuf,
    pub count: usize,
}

impl FrameSource for DirectorySource {
    fn frame_count(&self) -> usize {
        self.count
    }

    fn frame(&self, index: usize) -> Result<GrayFrame, BenchError> {
        Ok(load_pgm(frame_path(&self.dir, index))?)
    }
}

pub struct MemorySource<'a>(pub &'a [GrayFrame]);

impl FrameSource for MemorySource<'_> {
    fn frame_count(&self) -> usize {
        self.0.len()
    }

    fn frame(&self, index: usize) -> Result<GrayFrame, BenchError> {
        index
            .checked_sub(1)
            .and_then(|i| self.0.get(i))
            .cloned()
            .ok_or_else(|| BenchError::Invariant(format!("frame {index} outside 1..={}", self.0.len())))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DescribeOptions {
    pub kind: DescriptorKind,
    /// Use only the first `ceil(fraction · (T − 1))` frame pairs.
    pub truncate: Option<f64>,
}

impl Default for DescribeOptions {
    fn default() -> Self {
        Self { kind: DescriptorKind::Sta2, truncate: None }
    }
}

impl DescribeOptions {
    fn pair_limit(&self, pairs: usize) -> Result<usize, BenchError> {
        match self.truncate {
            None => Ok(pairs),
            Some(f) if f > 0.0 && f <= 1.0 => Ok(((f * pairs as f64).ceil() as usize).clamp(1, pairs)),
            Some(f) => Err(BenchError::malformed("options", format!("truncation fraction {f} outside (0, 1]"))),
        }
    }
}

enum Aggregate {
    Sta1(Vec<GridVector>),
    Sta2(Sta2Accumulator),
}

impl Aggregate {
    fn count(&self) -> usize {
        match self {
            Aggregate::Sta1(v) => v.len(),
            Aggregate::Sta2(a) => a.t(),
        }
    }
}

/// Descriptors of one sequence, one per entry of `params`.
///
/// Frame pair `(θ, θ+1)` is used when frame `θ` has a box. Boxes too small
/// for a grid are skipped for that grid. A sequence where some grid ends up
/// with no usable pair is rejected with [`BenchError::NoUsableFrames`].
pub fn sequence_descriptors(
    id: &str,
    frames: &dyn FrameSource,
    boxes: &BTreeMap<usize, BoundingBox>,
    flow: &FlowAlgorithm,
    params: &[StaParams],
    options: &DescribeOptions,
) -> Result<Vec<Descriptor>, BenchError> {
    let pairs = frames.frame_count().saturating_sub(1);
    if pairs == 0 {
        return Err(BenchError::NoUsableFrames(id.to_string()));
    }
    let limit = options.pair_limit(pairs)?;
    let mut aggregates = params
        .iter()
        .map(|p| {
            p.validate()?;
            Ok(match options.kind {
                DescriptorKind::Sta1 => Aggregate::Sta1(Vec::new()),
                DescriptorKind::Sta2 => Aggregate::Sta2(Sta2Accumulator::new(*p)?),
            })
        })
        .collect::<Result<Vec<_>, StaError>>()?;

    let mut cached: Option<(usize, GrayFrame)> = None;
    for (&theta, bbox) in boxes.range(1..=limit) {
        let prev = match cached.take() {
            Some((i, f)) if i == theta => f,
            _ => frames.frame(theta)?,
        };
        let next = frames.frame(theta + 1)?;
        let field = flow.compute(&prev, &next)?;
        for (p, agg) in params.iter().zip(aggregates.iter_mut()) {
            let g = match grid_vector(&field, bbox, p) {
                Ok(g) => g,
                Err(StaError::BoxTooSmall { .. }) => continue,
                Err(e) => return Err(e.into()),
            };
            match agg {
                Aggregate::Sta1(v) => v.push(g),
                Aggregate::Sta2(a) => a.push(&g)?,
            }
        }
        cached = Some((theta + 1, next));
    }

    if aggregates.iter().any(|a| a.count() == 0) {
        return Err(BenchError::NoUsableFrames(id.to_string()));
    }
    aggregates
        .iter()
        .map(|a| match a {
            Aggregate::Sta1(v) => sta1(v, None).map_err(BenchError::from),
            Aggregate::Sta2(acc) => acc.extract().map_err(BenchError::from),
        })
        .collect()
}

/// Descriptor of one manifest record.
pub fn sequence_descriptor(
    record: &SequenceRecord,
    flow: &FlowAlgorithm,
    params: &StaParams,
    options: &DescribeOptions,
) -> Result<Descriptor, BenchError> {
    let mut d = record_descriptors(record, flow, std::slice::from_ref(params), options)?;
    Ok(d.remove(0))
}

fn record_descriptors(
    record: &SequenceRecord,
    flow: &FlowAlgorithm,
    params: &[StaParams],
    options: &DescribeOptions,
) -> Result<Vec<Descriptor>, BenchError> {
    let source = DirectorySource { dir: record.frame_dir.clone(), count: record.frames() };
    let boxes = load_annotations(&record.annotation_file, record.frames())?;
    sequence_descriptors(&record.id, &source, &boxes, flow, params, options)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkippedSequence {
    pub id: String,
    pub reason: String,
}

/// Descriptors of a whole dataset for several grids sharing one flow pass.
#[derive(Clone, Debug, PartialEq)]
pub struct DescribedDataset {
    pub params: Vec<StaParams>,
    /// `rows[g]` holds the descriptors for `params[g]`, in manifest order.
    pub rows: Vec<Vec<DescriptorRow>>,
    pub skipped: Vec<SkippedSequence>,
}

impl DescribedDataset {
    pub fn rows_for(&self, params: &StaParams) -> Option<&[DescriptorRow]> {
        self.params.iter().position(|p| p == params).map(|i| self.rows[i].as_slice())
    }
}

/// Describes every sequence of the manifest on `jobs` workers.
///
/// Sequences without a usable frame pair are skipped and reported; any
/// other error aborts. Output order follows the manifest regardless of
/// scheduling.
pub fn describe_dataset(
    manifest: &DatasetManifest,
    flow: &FlowAlgorithm,
    params: &[StaParams],
    options: &DescribeOptions,
    jobs: usize,
) -> Result<DescribedDataset, BenchError> {
    if params.is_empty() {
        return Err(BenchError::EmptyGrid("STA"));
    }
    let results: Vec<Result<Vec<Descriptor>, BenchError>> = with_jobs(jobs, || {
        manifest.sequences.par_iter().map(|r| record_descriptors(r, flow, params, options)).collect()
    });
    let mut out = DescribedDataset { params: params.to_vec(), rows: vec![Vec::new(); params.len()], skipped: Vec::new() };
    for (record, result) in manifest.sequences.iter().zip(results) {
        match result {
            Ok(descriptors) => {
                for (rows, d) in out.rows.iter_mut().zip(descriptors) {
                    rows.push(DescriptorRow {
                        id: record.id.clone(),
                        label: record.action.name().to_string(),
                        group: record.person,
                        values: d.values,
                    });
                }
            }
            Err(e @ BenchError::NoUsableFrames(_)) => {
                out.skipped.push(SkippedSequence { id: record.id.clone(), reason: e.to_string() })
            }
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}
