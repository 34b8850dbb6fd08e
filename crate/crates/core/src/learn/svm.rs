//! Linear max-margin classifier, one-vs-rest.
//!
//! Each binary problem minimizes `½‖w‖² + C Σ max(0, 1 − yᵢ(wᵀxᵢ + b))` by
//! coordinate descent on the dual, with the bias folded in as a constant
//! feature. One iteration is one sweep over all samples.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::forest::argmax_lowest;
use super::{check_samples, class_count, LearnError, Sample};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmConfig {
    pub c: f64,
    pub max_iterations: usize,
    /// Stop once an iteration changes the dual objective by less than this.
    pub tolerance: f64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self { c: 1.0, max_iterations: 100_000, tolerance: 1e-12 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub config: SvmConfig,
    /// One weight vector per class.
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
    /// Iterations used by each binary subproblem.
    pub iterations: Vec<usize>,
}

impl SvmModel {
    pub fn n_classes(&self) -> usize {
        self.weights.len()
    }

    pub fn scores(&self, features: &[f64]) -> Result<Vec<f64>, LearnError> {
        let d = self.weights.first().map_or(0, Vec::len);
        if features.len() != d {
            return Err(LearnError::DimensionMismatch { got: features.len(), expected: d });
        }
        Ok(self
            .weights
            .iter()
            .zip(&self.biases)
            .map(|(w, b)| w.iter().zip(features).map(|(a, x)| a * x).sum::<f64>() + b)
            .collect())
    }

    /// Class with the highest score; ties go to the lowest class id.
    pub fn predict(&self, features: &[f64]) -> Result<usize, LearnError> {
        Ok(argmax_lowest(&self.scores(features)?))
    }
}

/// Dual coordinate descent for one binary problem. Returns `(w, b, iterations)`.
fn train_binary(samples: &[Sample], positive: usize, config: &SvmConfig, seed: u64) -> (Vec<f64>, f64, usize) {
    let d = samples[0].features.len();
    let y: Vec<f64> = samples.iter().map(|s| if s.label == positive { 1.0 } else { -1.0 }).collect();
    // squared norms of the bias-augmented samples
    let qii: Vec<f64> = samples.iter().map(|s| s.features.iter().map(|x| x * x).sum::<f64>() + 1.0).collect();
    let mut alpha = vec![0.0; samples.len()];
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let objective = |w: &[f64], b: f64, alpha: &[f64]| {
        0.5 * (w.iter().map(|v| v * v).sum::<f64>() + b * b) - alpha.iter().sum::<f64>()
    };
    let mut previous = 0.0;
    let mut iterations = 0;
    while iterations < config.max_iterations {
        iterations += 1;
        order.shuffle(&mut rng);
        let mut moved = false;
        for &i in &order {
            let x = &samples[i].features;
            let margin = y[i] * (w.iter().zip(x).map(|(a, v)| a * v).sum::<f64>() + b);
            let grad = margin - 1.0;
            let projected = if alpha[i] == 0.0 {
                grad.min(0.0)
            } else if alpha[i] == config.c {
                grad.max(0.0)
            } else {
                grad
            };
            if projected == 0.0 {
                continue;
            }
            let new_alpha = (alpha[i] - grad / qii[i]).clamp(0.0, config.c);
            let delta = (new_alpha - alpha[i]) * y[i];
            if delta != 0.0 {
                moved = true;
                for (wk, xk) in w.iter_mut().zip(x) {
                    *wk += delta * xk;
                }
                b += delta;
                alpha[i] = new_alpha;
            }
        }
        let current = objective(&w, b, &alpha);
        if !moved || (current - previous).abs() < config.tolerance {
            break;
        }
        previous = current;
    }
    (w, b, iterations)
}

pub fn svm_train(samples: &[Sample], config: &SvmConfig) -> Result<SvmModel, LearnError> {
    check_samples(samples)?;
    let first = samples[0].label;
    if samples.iter().all(|s| s.label == first) {
        return Err(LearnError::SingleClass(first));
    }
    if !(config.c > 0.0) || config.max_iterations == 0 {
        return Err(LearnError::InvalidConfig(format!(
            "need c > 0 and max_iterations >= 1, got c = {}, max_iterations = {}",
            config.c, config.max_iterations
        )));
    }
    let n_classes = class_count(samples);
    let mut model = SvmModel { config: config.clone(), weights: Vec::new(), biases: Vec::new(), iterations: Vec::new() };
    for class in 0..n_classes {
        let (w, b, it) = train_binary(samples, class, config, class as u64);
        model.weights.push(w);
        model.biases.push(b);
        model.iterations.push(it);
    }
    Ok(model)
}

pub fn svm_predict(model: &SvmModel, features: &[f64]) -> Result<usize, LearnError> {
    model.predict(features)
}
