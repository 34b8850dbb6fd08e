//! Sequence description, leave-one-person-out evaluation and sweeps.

use std::collections::BTreeMap;

use staflow::bench::synthetic::{write_synthetic_dataset, SyntheticConfig};
use staflow::bench::{
    accuracy, cross_validate, describe_dataset, load_manifest, lopo_folds, lopo_folds_by_group, sequence_descriptors,
    standard_sta_grid, sweep, Action, BenchError, DescribeOptions, MemorySource,
};
use staflow::flow::{FarnebackParams, FlowAlgorithm};
use staflow::learn::{ClassifierConfig, ForestConfig, Sample, SvmConfig};
use staflow::raster::GrayFrame;
use staflow::sta::{BoundingBox, StaParams};
use staflow::synth::smooth_texture;

fn moving_frames(count: usize) -> Vec<GrayFrame> {
    let canvas = smooth_texture(80, 64, 4);
    (0..count)
        .map(|i| GrayFrame::from_fn(64, 48, |x, y| canvas.sample_bilinear(x as f64 + 8.0 - i as f64, y as f64 + 8.0 - i as f64)))
        .collect()
}

fn farneback() -> FlowAlgorithm {
    FlowAlgorithm::Farneback(FarnebackParams::default())
}

fn describe(frames: &[GrayFrame], boxed: &[usize], params: StaParams) -> Result<Vec<f64>, BenchError> {
    let bbox = BoundingBox::new(4, 4, 56, 40);
    let boxes: BTreeMap<usize, BoundingBox> = boxed.iter().map(|&f| (f, bbox)).collect();
    let d = sequence_descriptors("seq", &MemorySource(frames), &boxes, &farneback(), &[params], &DescribeOptions::default())?;
    Ok(d.into_iter().next().unwrap().values)
}

#[test]
fn single_pair_gives_one_hot_slices() {
    let params = StaParams::new(3, 6, 8, 5);
    let values = describe(&moving_frames(2), &[1], params).unwrap();
    assert_eq!(values.len(), params.sta2_len());
    for slice in values.chunks(params.k2) {
        assert_eq!(slice.iter().filter(|&&v| v == 1.0).count(), 1);
        assert_eq!(slice.iter().filter(|&&v| v == 0.0).count(), params.k2 - 1);
    }
}

#[test]
fn unboxed_frames_contribute_nothing() {
    let params = StaParams::new(3, 6, 4, 5);
    let frames = moving_frames(3);
    let first = describe(&frames[..2], &[1], params).unwrap();
    // box on frame 2 missing, box on the last frame has no successor
    assert_eq!(describe(&frames, &[1, 3], params).unwrap(), first);
    let second = describe(&frames[1..], &[1], params).unwrap();
    let both = describe(&frames, &[1, 2], params).unwrap();
    for ((a, b), c) in first.iter().zip(&second).zip(&both) {
        assert_eq!((a + b) / 2.0, *c);
    }
}

#[test]
fn no_boxed_pair_is_rejected() {
    let frames = moving_frames(3);
    assert!(matches!(describe(&frames, &[], StaParams::default()), Err(BenchError::NoUsableFrames(_))));
    assert!(matches!(describe(&frames, &[3], StaParams::default()), Err(BenchError::NoUsableFrames(_))));
}

#[test]
fn best_setting_has_1920_values() {
    let values = describe(&moving_frames(2), &[1], StaParams::new(8, 6, 8, 5)).unwrap();
    assert_eq!(values.len(), 1920);
}

#[test]
fn twenty_five_persons_give_twenty_five_folds() {
    let groups: Vec<u32> = (0..150).map(|i| i % 25 + 1).collect();
    let folds = lopo_folds_by_group(&groups).unwrap();
    assert_eq!(folds.len(), 25);
    let mut seen = vec![0; groups.len()];
    for (k, fold) in folds.iter().enumerate() {
        assert_eq!(fold.person, k as u32 + 1);
        for &i in &fold.test {
            seen[i] += 1;
            assert_eq!(groups[i], fold.person);
        }
        assert!(fold.train.iter().all(|&i| groups[i] != fold.person));
        assert_eq!(fold.train.len() + fold.test.len(), groups.len());
    }
    assert!(seen.iter().all(|&c| c == 1));
    assert!(matches!(lopo_folds_by_group(&[3, 3, 3]), Err(BenchError::SinglePerson)));
}

fn one_hot_samples(persons: u32) -> Vec<Sample> {
    let mut out = Vec::new();
    for person in 1..=persons {
        for class in 0..6 {
            for rep in 0..2 {
                let mut f = vec![0.0; 12];
                f[2 * class] = 1.0;
                f[2 * class + 1] = 0.5 + 0.1 * rep as f64;
                out.push(Sample::new(f, class, person));
            }
        }
    }
    out
}

#[test]
fn separable_classes_are_always_recognized() {
    let samples = one_hot_samples(5);
    let configs = [
        ClassifierConfig::Forest(ForestConfig { n_trees: 20, ..Default::default() }),
        ClassifierConfig::Svm(SvmConfig::default()),
    ];
    for config in &configs {
        let m = cross_validate(&samples, &Action::headings(), config, 7, 1).unwrap();
        assert_eq!(accuracy(&m).unwrap(), 1.0, "{}", config.label());
        assert_eq!(m.total(), samples.len() as u64);
        for row in &m.counts {
            assert_eq!(row.iter().sum::<u64>(), 10);
        }
        assert_eq!(cross_validate(&samples, &Action::headings(), config, 7, 3).unwrap(), m);
    }
}

fn small_dataset(dir: &std::path::Path) -> std::path::PathBuf {
    let config = SyntheticConfig { persons: 3, sequences_per_class: 1, frames: 3, seed: 9, ..Default::default() };
    write_synthetic_dataset(dir, &config).unwrap()
}

#[test]
fn sweep_over_the_standard_grid() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = load_manifest(small_dataset(tmp.path())).unwrap();
    let classifiers = [ClassifierConfig::Forest(ForestConfig { n_trees: 10, ..Default::default() })];
    let rows = sweep(&manifest, &[farneback()], &standard_sta_grid(), &classifiers, &DescribeOptions::default(), 1, 1).unwrap();
    assert_eq!(rows.len(), 24);
    for pair in rows.windows(2) {
        assert!(pair[0].accuracy >= pair[1].accuracy);
    }
    for row in &rows {
        assert_eq!(row.accuracy, accuracy(&row.confusion).unwrap());
        assert!((0.0..=1.0).contains(&row.accuracy));
        assert_eq!(row.confusion.total(), 18);
        for counts in &row.confusion.counts {
            assert_eq!(counts.iter().sum::<u64>(), 3);
        }
    }
    let mut grids: Vec<StaParams> = rows.iter().map(|r| r.sta).collect();
    grids.dedup();
    assert_eq!(grids.len(), 24);
}

#[test]
fn skipped_sequences_leave_the_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let path = small_dataset(tmp.path());
    let manifest = load_manifest(&path).unwrap();
    let victim = manifest.sequences[4].clone();
    std::fs::write(&victim.annotation_file, "").unwrap();
    let classifiers = [ClassifierConfig::Svm(SvmConfig::default())];
    let rows = sweep(&manifest, &[farneback()], &[StaParams::default()], &classifiers, &DescribeOptions::default(), 1, 1).unwrap();
    assert_eq!(rows[0].skipped, vec![victim.id.clone()]);
    assert_eq!(rows[0].confusion.total(), 17);
    assert_eq!(rows[0].confusion.counts[victim.action.index()].iter().sum::<u64>(), 2);
}

#[test]
fn end_to_end_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = load_manifest(small_dataset(tmp.path())).unwrap();
    assert_eq!(lopo_folds(&manifest).unwrap().len(), 3);
    let params = [StaParams::default()];
    let run = |jobs| {
        let d = describe_dataset(&manifest, &farneback(), &params, &DescribeOptions::default(), jobs).unwrap();
        let samples = staflow::bench::samples_from_rows(&d.rows[0]).unwrap();
        cross_validate(&samples, &Action::headings(), &ClassifierConfig::default(), 42, jobs).unwrap()
    };
    let a = run(1);
    assert_eq!(run(1), a);
    assert_eq!(run(2), a);
}
