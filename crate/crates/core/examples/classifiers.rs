//! Random forest and linear SVM on a toy three-class problem, with JSON
//! model round trip.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use staflow::learn::{ClassifierConfig, ForestConfig, LearnError, Model, Sample, SvmConfig};

fn blobs(n: usize, seed: u64) -> Vec<Sample> {
    let centers = [[0.0, 0.0, 1.0], [3.0, 0.5, 0.0], [0.5, 3.0, 2.0]];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let c = i % 3;
            let f = centers[c].iter().map(|v| v + rng.gen_range(-0.8..0.8)).collect();
            Sample::new(f, c, 0)
        })
        .collect()
}

fn main() -> Result<(), LearnError> {
    let train = blobs(150, 1);
    let test = blobs(60, 2);
    let configs = [
        ClassifierConfig::Forest(ForestConfig { n_trees: 50, seed: 3, ..Default::default() }),
        ClassifierConfig::Svm(SvmConfig { c: 1.0, ..Default::default() }),
    ];
    for config in &configs {
        let model = config.train(&train)?;
        let hits = test.iter().filter(|s| model.predict(&s.features).ok() == Some(s.label)).count();
        let restored = Model::from_json(&model.to_json()?)?;
        assert_eq!(restored, model);
        println!("{:<40} test accuracy {}/{}", config.label(), hits, test.len());
    }
    Ok(())
}
