//! Leave-one-person-out cross-validation and confusion matrices.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{derive_seed, with_jobs, Action, BenchError, DatasetManifest};
use crate::learn::{ClassifierConfig, Sample};
use crate::sta::DescriptorRow;

/// Rows are true classes, columns predicted classes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub labels: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(labels: Vec<String>) -> Self {
        let n = labels.len();
        Self { labels, counts: vec![vec![0; n]; n] }
    }

    /// Builds a matrix from literal counts; every row must have one entry per label.
    pub fn from_counts(labels: Vec<String>, counts: Vec<Vec<u64>>) -> Result<Self, BenchError> {
        let n = labels.len();
        if counts.len() != n || counts.iter().any(|r| r.len() != n) {
            return Err(BenchError::malformed("confusion matrix", format!("expected {n}x{n} counts")));
        }
        Ok(Self { labels, counts })
    }

    pub fn n_classes(&self) -> usize {
        self.labels.len()
    }

    pub fn record(&mut self, truth: usize, predicted: usize) {
        self.counts[truth][predicted] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> u64 {
        (0..self.n_classes()).map(|i| self.counts[i][i]).sum()
    }

    /// Trace over total.
    pub fn accuracy(&self) -> Result<f64, BenchError> {
        accuracy(self)
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        for (row, o) in self.counts.iter_mut().zip(&other.counts) {
            for (c, v) in row.iter_mut().zip(o) {
                *c += v;
            }
        }
    }
}

pub fn accuracy(matrix: &ConfusionMatrix) -> Result<f64, BenchError> {
    match matrix.total() {
        0 => Err(BenchError::Empty("confusion matrix has no entries".into())),
        total => Ok(matrix.correct() as f64 / total as f64),
    }
}

impl fmt::Display for ConfusionMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self.labels.iter().map(String::len).max().unwrap_or(0).max(6);
        write!(f, "{:width$}", "")?;
        for l in &self.labels {
            write!(f, " {l:>width$}")?;
        }
        writeln!(f)?;
        for (l, row) in self.labels.iter().zip(&self.counts) {
            write!(f, "{l:width$}")?;
            for c in row {
                write!(f, " {c:>width$}")?;
            }
            writeln!(f)?;
        }
        match self.accuracy() {
            Ok(a) => write!(f, "accuracy {a:.4}"),
            Err(_) => write!(f, "accuracy n/a"),
        }
    }
}

/// One held-out person: sample indices to train on and to test on.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fold {
    pub person: u32,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Folds over sample indices grouped by person, in ascending person order.
pub fn lopo_folds_by_group(groups: &[u32]) -> Result<Vec<Fold>, BenchError> {
    let mut persons: Vec<u32> = groups.to_vec();
    persons.sort_unstable();
    persons.dedup();
    if persons.len() < 2 {
        return Err(BenchError::SinglePerson);
    }
    Ok(persons
        .into_iter()
        .map(|person| {
            let (test, train) = (0..groups.len()).partition(|&i| groups[i] == person);
            Fold { person, train, test }
        })
        .collect())
}

/// Folds over manifest records; indices refer to `manifest.sequences`.
pub fn lopo_folds(manifest: &DatasetManifest) -> Result<Vec<Fold>, BenchError> {
    let groups: Vec<u32> = manifest.sequences.iter().map(|r| r.person).collect();
    lopo_folds_by_group(&groups)
}

/// Classifier samples from descriptor rows labeled with action names.
pub fn samples_from_rows(rows: &[DescriptorRow]) -> Result<Vec<Sample>, BenchError> {
    rows.iter()
        .map(|r| Ok(Sample::new(r.values.clone(), r.label.parse::<Action>()?.index(), r.group)))
        .collect()
}

/// Leave-one-person-out evaluation of `config` on `samples`.
///
/// Fold `i` trains with seed `derive_seed(seed, person)`, so results do not
/// depend on `jobs`. The confusion matrix sums the predictions of all folds.
pub fn cross_validate(
    samples: &[Sample],
    labels: &[String],
    config: &ClassifierConfig,
    seed: u64,
    jobs: usize,
) -> Result<ConfusionMatrix, BenchError> {
    if samples.is_empty() {
        return Err(BenchError::Empty("no samples".into()));
    }
    if let Some(s) = samples.iter().find(|s| s.label >= labels.len()) {
        return Err(BenchError::Invariant(format!("label {} without a name", s.label)));
    }
    let groups: Vec<u32> = samples.iter().map(|s| s.group).collect();
    let folds = lopo_folds_by_group(&groups)?;
    let results: Vec<Result<ConfusionMatrix, BenchError>> = with_jobs(jobs, || {
        folds
            .par_iter()
            .map(|fold| {
                let train: Vec<Sample> = fold.train.iter().map(|&i| samples[i].clone()).collect();
                let model = config.with_seed(derive_seed(seed, u64::from(fold.person))).train(&train)?;
                let mut m = ConfusionMatrix::new(labels.to_vec());
                for &i in &fold.test {
                    m.record(samples[i].label, model.predict(&samples[i].features)?);
                }
                Ok(m)
            })
            .collect()
    });
    let mut total = ConfusionMatrix::new(labels.to_vec());
    for r in results {
        total.merge(&r?);
    }
    Ok(total)
}
