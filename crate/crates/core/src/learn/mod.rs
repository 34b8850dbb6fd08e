//! Classifiers for descriptor vectors: a random forest and a one-vs-rest
//! linear SVM. Both are deterministic for a fixed configuration.

pub mod forest;
pub mod svm;

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use forest::{rf_predict, rf_train, DecisionTree, ForestConfig, ForestModel, ForestPrediction, Node};
pub use svm::{svm_predict, svm_train, SvmConfig, SvmModel};

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("no training samples")]
    Empty,
    #[error("samples have inconsistent feature lengths ({first} vs {other})")]
    InconsistentDimensions { first: usize, other: usize },
    #[error("feature length {got}, model expects {expected}")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("all samples belong to class {0}")]
    SingleClass(usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("model file: {0}")]
    Format(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// A feature vector with its class id and cross-validation group.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub features: Vec<f64>,
    pub label: usize,
    pub group: u32,
}

impl Sample {
    pub fn new(features: Vec<f64>, label: usize, group: u32) -> Self {
        Self { features, label, group }
    }
}

/// Returns the shared feature length.
pub(crate) fn check_samples(samples: &[Sample]) -> Result<usize, LearnError> {
    let first = samples.first().ok_or(LearnError::Empty)?.features.len();
    if let Some(s) = samples.iter().find(|s| s.features.len() != first) {
        return Err(LearnError::InconsistentDimensions { first, other: s.features.len() });
    }
    Ok(first)
}

pub(crate) fn class_count(samples: &[Sample]) -> usize {
    samples.iter().map(|s| s.label).max().map_or(0, |m| m + 1)
}

/// Classifier choice plus its hyperparameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "classifier", rename_all = "lowercase")]
pub enum ClassifierConfig {
    Forest(ForestConfig),
    Svm(SvmConfig),
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig::Forest(ForestConfig::default())
    }
}

impl ClassifierConfig {
    pub fn train(&self, samples: &[Sample]) -> Result<Model, LearnError> {
        match self {
            ClassifierConfig::Forest(c) => rf_train(samples, c).map(Model::Forest),
            ClassifierConfig::Svm(c) => svm_train(samples, c).map(Model::Svm),
        }
    }

    /// Same configuration with the random seed replaced (no-op for the SVM).
    pub fn with_seed(&self, seed: u64) -> Self {
        match self {
            ClassifierConfig::Forest(c) => ClassifierConfig::Forest(ForestConfig { seed, ..c.clone() }),
            ClassifierConfig::Svm(c) => ClassifierConfig::Svm(c.clone()),
        }
    }

    pub fn label(&self) -> String {
        match self {
            ClassifierConfig::Forest(c) => format!(
                "forest(trees={},depth={},features={})",
                c.n_trees,
                c.max_depth,
                c.n_features_per_split.map_or("sqrt".to_string(), |f| f.to_string())
            ),
            ClassifierConfig::Svm(c) => format!("svm(c={})", c.c),
        }
    }
}

/// A trained classifier. Serialized as JSON with its configuration and
/// seed, so a stored model can be audited and reproduced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum Model {
    Forest(ForestModel),
    Svm(SvmModel),
}

impl Model {
    pub fn predict(&self, features: &[f64]) -> Result<usize, LearnError> {
        match self {
            Model::Forest(m) => m.predict(features).map(|p| p.label),
            Model::Svm(m) => m.predict(features),
        }
    }

    pub fn to_json(&self) -> Result<String, LearnError> {
        serde_json::to_string(self).map_err(|e| LearnError::Format(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self, LearnError> {
        serde_json::from_str(text).map_err(|e| LearnError::Format(e.to_string()))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), LearnError> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, LearnError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
