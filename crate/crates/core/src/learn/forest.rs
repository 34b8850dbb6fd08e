//! Random forest of CART trees: bootstrap resampling, Gini-impurity splits
//! over a random feature subset, majority voting.

use rand::seq::index::sample as sample_indices;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_samples, class_count, LearnError, Sample};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    /// Candidate features drawn per split; `None` means `round(sqrt(d))`.
    pub n_features_per_split: Option<usize>,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self { n_trees: 100, max_depth: 15, n_features_per_split: None, seed: 0 }
    }
}

impl ForestConfig {
    /// Candidate count for feature dimension `d`.
    pub fn features_per_split(&self, d: usize) -> usize {
        self.n_features_per_split.unwrap_or_else(|| ((d as f64).sqrt().round() as usize).max(1))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Split { feature: usize, threshold: f64, left: usize, right: usize },
    /// Class counts of the training samples that reached this leaf.
    Leaf { counts: Vec<usize> },
}

/// A single tree stored as a flat node arena, root at index 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
}

impl DecisionTree {
    fn leaf(&self, features: &[f64]) -> &[usize] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Split { feature, threshold, left, right } => {
                    i = if features[*feature] <= *threshold { *left } else { *right };
                }
                Node::Leaf { counts } => return counts,
            }
        }
    }

    /// Majority class of the leaf reached by `features`; ties go to the
    /// lowest class id.
    pub fn predict(&self, features: &[f64]) -> usize {
        argmax_lowest(self.leaf(features))
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
                Node::Leaf { .. } => 0,
            }
        }
        walk(&self.nodes, 0)
    }
}

/// Index of the largest count, lowest index on ties.
pub(crate) fn argmax_lowest<T: PartialOrd + Copy>(values: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub config: ForestConfig,
    pub n_classes: usize,
    pub n_features: usize,
    pub trees: Vec<DecisionTree>,
}

/// Per-class vote counts from every tree plus the winning label.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ForestPrediction {
    pub label: usize,
    pub votes: Vec<usize>,
}

impl ForestModel {
    pub fn predict(&self, features: &[f64]) -> Result<ForestPrediction, LearnError> {
        if features.len() != self.n_features {
            return Err(LearnError::DimensionMismatch { got: features.len(), expected: self.n_features });
        }
        let mut votes = vec![0; self.n_classes];
        for tree in &self.trees {
            votes[tree.predict(features)] += 1;
        }
        Ok(ForestPrediction { label: argmax_lowest(&votes), votes })
    }
}

struct TreeBuilder<'a> {
    samples: &'a [Sample],
    n_classes: usize,
    max_depth: usize,
    n_candidates: usize,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

fn gini_weighted(counts: &[usize], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    let sum_sq: f64 = counts.iter().map(|&c| (c as f64) * (c as f64)).sum();
    // total * gini = total - Σc²/total
    t - sum_sq / t
}

impl TreeBuilder<'_> {
    fn counts(&self, idx: &[usize]) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for &i in idx {
            counts[self.samples[i].label] += 1;
        }
        counts
    }

    fn best_split(&mut self, idx: &[usize], parent: &[usize]) -> Option<BestSplit> {
        let d = self.samples[0].features.len();
        let candidates = sample_indices(&mut self.rng, d, self.n_candidates.min(d)).into_vec();
        let mut best: Option<BestSplit> = None;
        let mut order: Vec<(f64, usize)> = Vec::with_capacity(idx.len());
        for feature in candidates {
            order.clear();
            order.extend(idx.iter().map(|&i| (self.samples[i].features[feature], self.samples[i].label)));
            order.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut left = vec![0; self.n_classes];
            let mut right = parent.to_vec();
            for k in 0..order.len() - 1 {
                let (value, label) = order[k];
                left[label] += 1;
                right[label] -= 1;
                let next = order[k + 1].0;
                if next <= value {
                    continue;
                }
                let n_left = k + 1;
                let impurity = gini_weighted(&left, n_left) + gini_weighted(&right, order.len() - n_left);
                if best.as_ref().is_none_or(|b| impurity < b.impurity) {
                    let mut threshold = 0.5 * (value + next);
                    // midpoint can round up to `next` for adjacent floats
                    if threshold >= next {
                        threshold = value;
                    }
                    best = Some(BestSplit { feature, threshold, impurity });
                }
            }
        }
        best
    }

    fn grow(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let counts = self.counts(&idx);
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { counts: counts.clone() });
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || depth >= self.max_depth || idx.len() < 2 {
            return id;
        }
        // zero-gain splits are allowed; XOR-like data has none at the root
        let Some(split) = self.best_split(&idx, &counts) else {
            return id;
        };
        let (left_idx, right_idx): (Vec<usize>, Vec<usize>) =
            idx.iter().partition(|&&i| self.samples[i].features[split.feature] <= split.threshold);
        let left = self.grow(left_idx, depth + 1);
        let right = self.grow(right_idx, depth + 1);
        self.nodes[id] = Node::Split { feature: split.feature, threshold: split.threshold, left, right };
        id
    }
}

fn tree_rng(seed: u64, tree: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(tree as u64);
    rng
}

/// Trains `config.n_trees` trees in parallel. Each tree draws from its own
/// random stream derived from `(seed, tree index)`, so the model does not
/// depend on scheduling.
pub fn rf_train(samples: &[Sample], config: &ForestConfig) -> Result<ForestModel, LearnError> {
    let d = check_samples(samples)?;
    if config.n_trees == 0 {
        return Err(LearnError::InvalidConfig("n_trees must be at least 1".into()));
    }
    let n_candidates = config.features_per_split(d);
    if n_candidates == 0 || n_candidates > d {
        return Err(LearnError::InvalidConfig(format!(
            "n_features_per_split = {n_candidates} outside 1..={d}"
        )));
    }
    let n_classes = class_count(samples);
    let trees = (0..config.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = tree_rng(config.seed, t);
            let bootstrap: Vec<usize> = (0..samples.len()).map(|_| rng.gen_range(0..samples.len())).collect();
            let mut builder = TreeBuilder {
                samples,
                n_classes,
                max_depth: config.max_depth,
                n_candidates,
                rng,
                nodes: Vec::new(),
            };
            builder.grow(bootstrap, 0);
            DecisionTree { nodes: builder.nodes }
        })
        .collect();
    Ok(ForestModel { config: config.clone(), n_classes, n_features: d, trees })
}

pub fn rf_predict(model: &ForestModel, features: &[f64]) -> Result<ForestPrediction, LearnError> {
    model.predict(features)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xor(points_per_cluster: usize, seed: u64) -> Vec<Sample> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::new();
        for (cx, cy, label) in [(0.0, 0.0, 0), (1.0, 1.0, 0), (0.0, 1.0, 1), (1.0, 0.0, 1)] {
            for _ in 0..points_per_cluster {
                let x = cx + rng.gen_range(-0.2..0.2);
                let y = cy + rng.gen_range(-0.2..0.2);
                out.push(Sample::new(vec![x, y], label, 0));
            }
        }
        out
    }

    fn accuracy(model: &ForestModel, data: &[Sample]) -> f64 {
        let hits = data.iter().filter(|s| model.predict(&s.features).unwrap().label == s.label).count();
        hits as f64 / data.len() as f64
    }

    #[test]
    fn single_class_always_predicted() {
        let data: Vec<Sample> = (0..20).map(|i| Sample::new(vec![i as f64, 1.0], 3, 0)).collect();
        let model = rf_train(&data, &ForestConfig { n_trees: 5, ..Default::default() }).unwrap();
        for probe in [[-5.0, 0.0], [100.0, 3.0], [7.0, 1.0]] {
            let p = model.predict(&probe).unwrap();
            assert_eq!(p.label, 3);
            assert_eq!(p.votes[3], 5);
        }
    }

    #[test]
    fn learns_xor() {
        let data = xor(100, 1);
        let config = ForestConfig { n_trees: 50, max_depth: 4, n_features_per_split: None, seed: 9 };
        let model = rf_train(&data, &config).unwrap();
        assert!(accuracy(&model, &data) >= 0.95);
        assert!(model.trees.iter().all(|t| t.depth() <= 4));
    }

    #[test]
    fn same_seed_same_model() {
        let data = xor(30, 2);
        let config = ForestConfig { n_trees: 20, seed: 77, ..Default::default() };
        let a = rf_train(&data, &config).unwrap();
        let b = rf_train(&data, &config).unwrap();
        assert_eq!(a, b);
        let c = rf_train(&data, &ForestConfig { seed: 78, ..config }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn serial_equals_parallel() {
        let data = xor(30, 3);
        let config = ForestConfig { n_trees: 16, seed: 5, ..Default::default() };
        let parallel = rf_train(&data, &config).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let serial = pool.install(|| rf_train(&data, &config)).unwrap();
        assert_eq!(parallel, serial);
    }

    #[test]
    fn tie_goes_to_lowest_class() {
        let leaf = |counts: Vec<usize>| DecisionTree { nodes: vec![Node::Leaf { counts }] };
        let model = ForestModel {
            config: ForestConfig::default(),
            n_classes: 3,
            n_features: 1,
            trees: vec![leaf(vec![0, 0, 4]), leaf(vec![0, 4, 0])],
        };
        let p = model.predict(&[0.0]).unwrap();
        assert_eq!(p.votes, vec![0, 1, 1]);
        assert_eq!(p.label, 1);
        // leaf-level ties too
        assert_eq!(leaf(vec![0, 2, 2]).predict(&[0.0]), 1);
    }

    #[test]
    fn single_tree_predicts_leaf_majority() {
        let data = xor(10, 4);
        let model = rf_train(&data, &ForestConfig { n_trees: 1, max_depth: 30, seed: 1, ..Default::default() }).unwrap();
        let tree = &model.trees[0];
        for s in &data {
            let counts = tree.leaf(&s.features);
            assert_eq!(model.predict(&s.features).unwrap().label, argmax_lowest(counts));
        }
    }

    #[test]
    fn dimension_and_config_errors() {
        let data = xor(5, 5);
        let model = rf_train(&data, &ForestConfig { n_trees: 2, ..Default::default() }).unwrap();
        assert!(matches!(model.predict(&[1.0]), Err(LearnError::DimensionMismatch { .. })));
        assert!(matches!(rf_train(&[], &ForestConfig::default()), Err(LearnError::Empty)));
        let bad = ForestConfig { n_features_per_split: Some(3), ..Default::default() };
        assert!(matches!(rf_train(&data, &bad), Err(LearnError::InvalidConfig(_))));
    }

    #[test]
    fn votes_sum_to_tree_count() {
        let data = xor(20, 6);
        let model = rf_train(&data, &ForestConfig { n_trees: 13, ..Default::default() }).unwrap();
        for s in &data {
            assert_eq!(model.predict(&s.features).unwrap().votes.iter().sum::<usize>(), 13);
        }
    }
}
