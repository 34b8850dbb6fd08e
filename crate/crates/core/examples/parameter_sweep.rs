//! Sweeps STA grid sizes and classifiers on a small synthetic dataset and
//! prints the ranked CSV report.

use std::error::Error;

use staflow::bench::synthetic::{write_synthetic_dataset, SyntheticConfig};
use staflow::bench::{load_manifest, sta_grid, sweep, write_report_csv, DescribeOptions};
use staflow::flow::{FarnebackParams, FlowAlgorithm};
use staflow::learn::{ClassifierConfig, ForestConfig, SvmConfig};

fn main() -> Result<(), Box<dyn Error>> {
    let tmp = std::env::temp_dir().join("staflow-sweep");
    let config = SyntheticConfig { persons: 4, sequences_per_class: 1, frames: 4, seed: 11, ..Default::default() };
    let manifest = load_manifest(write_synthetic_dataset(&tmp, &config)?)?;

    let flows = [
        FlowAlgorithm::Farneback(FarnebackParams { w: 2, ..Default::default() }),
        FlowAlgorithm::Farneback(FarnebackParams { w: 4, ..Default::default() }),
    ];
    let stas = sta_grid(&[3, 6], &[6, 8], &[4, 8], &[5]);
    let classifiers = [
        ClassifierConfig::Forest(ForestConfig { n_trees: 30, ..Default::default() }),
        ClassifierConfig::Svm(SvmConfig { c: 10.0, ..Default::default() }),
    ];
    let rows = sweep(&manifest, &flows, &stas, &classifiers, &DescribeOptions::default(), 1, 0)?;
    write_report_csv(&rows, std::io::stdout().lock())?;
    Ok(())
}
