//! Evaluation harness: dataset manifests, per-frame bounding boxes,
//! whole-sequence descriptor extraction, leave-one-person-out
//! cross-validation and parameter sweeps.

mod annotations;
mod cv;
mod manifest;
mod pipeline;
mod sweep;
pub mod synthetic;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flow::FlowError;
use crate::learn::LearnError;
use crate::raster::RasterError;
use crate::sta::StaError;

pub use annotations::{load_annotations, parse_annotations, write_annotations};
pub use cv::{accuracy, cross_validate, lopo_folds, lopo_folds_by_group, samples_from_rows, ConfusionMatrix, Fold};
pub use manifest::{load_manifest, DatasetManifest, SequenceRecord};
pub use pipeline::{
    describe_dataset, frame_path, sequence_descriptor, sequence_descriptors, DescribeOptions, DescribedDataset,
    DirectorySource, FrameSource, MemorySource, SkippedSequence,
};
pub use sweep::{standard_sta_grid, sta_grid, sweep, sweep_described, union_sta_grid, write_report_csv, SweepRow};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("malformed {what}: {detail}")]
    Malformed { what: String, detail: String },
    #[error("sequence {id}: missing path {path}")]
    MissingPath { id: String, path: String },
    #[error("sequence {0}: no frame pair with a usable bounding box")]
    NoUsableFrames(String),
    #[error("leave-one-person-out needs at least two persons")]
    SinglePerson,
    #[error("empty {0} grid")]
    EmptyGrid(&'static str),
    #[error("nothing to evaluate: {0}")]
    Empty(String),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Sta(#[from] StaError),
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl BenchError {
    pub(crate) fn malformed(what: impl Into<String>, detail: impl Into<String>) -> Self {
        BenchError::Malformed { what: what.into(), detail: detail.into() }
    }
}

/// The six action classes, in the row order of the confusion tables.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Boxing,
    Handclapping,
    Handwaving,
    Jogging,
    Running,
    Walking,
}

impl Action {
    pub const ALL: [Action; 6] =
        [Action::Boxing, Action::Handclapping, Action::Handwaving, Action::Jogging, Action::Running, Action::Walking];

    /// Class id used by the classifiers.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Action> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Action::Boxing => "boxing",
            Action::Handclapping => "handclapping",
            Action::Handwaving => "handwaving",
            Action::Jogging => "jogging",
            Action::Running => "running",
            Action::Walking => "walking",
        }
    }

    /// Short column heading used when printing confusion tables.
    pub fn heading(self) -> &'static str {
        match self {
            Action::Boxing => "Boxing",
            Action::Handclapping => "Clapping",
            Action::Handwaving => "Waving",
            Action::Jogging => "Jogging",
            Action::Running => "Running",
            Action::Walking => "Walking",
        }
    }

    pub fn headings() -> Vec<String> {
        Self::ALL.iter().map(|a| a.heading().to_string()).collect()
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Action {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .iter()
            .copied()
            .find(|a| a.name() == s)
            .ok_or_else(|| BenchError::malformed("action", format!("unknown action {s:?}")))
    }
}

/// Runs `f` on a dedicated pool of `jobs` workers (0 = rayon's default).
pub fn with_jobs<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> T {
    match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

/// Mixes a master seed with an index (SplitMix64 finalizer).
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
