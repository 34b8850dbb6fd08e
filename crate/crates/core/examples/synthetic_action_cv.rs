//! Writes the six-class synthetic action dataset, describes every sequence
//! with STA2 and runs leave-one-person-out cross-validation for both flow
//! solvers.
//!
//! ```text
//! cargo run --release --example synthetic_action_cv -- [dataset_dir]
//! ```

use std::error::Error;
use std::path::PathBuf;
use std::time::Instant;

use staflow::bench::synthetic::{write_synthetic_dataset, SyntheticConfig};
use staflow::bench::{cross_validate, describe_dataset, load_manifest, samples_from_rows, Action, DescribeOptions};
use staflow::flow::{FarnebackParams, FlowAlgorithm, TvL1Params};
use staflow::learn::ClassifierConfig;
use staflow::sta::StaParams;

fn main() -> Result<(), Box<dyn Error>> {
    let dir: PathBuf = std::env::args().nth(1).map_or_else(|| std::env::temp_dir().join("staflow-actions"), PathBuf::from);
    let manifest_path = write_synthetic_dataset(&dir, &SyntheticConfig { seed: 2024, ..Default::default() })?;
    let manifest = load_manifest(&manifest_path)?;
    println!("{} sequences of {} persons in {}", manifest.len(), manifest.persons().len(), dir.display());

    let params = [StaParams::default()];
    for flow in [FlowAlgorithm::Farneback(FarnebackParams::default()), FlowAlgorithm::Tvl1(TvL1Params::default())] {
        let start = Instant::now();
        let described = describe_dataset(&manifest, &flow, &params, &DescribeOptions::default(), 0)?;
        let samples = samples_from_rows(&described.rows[0])?;
        let confusion = cross_validate(&samples, &Action::headings(), &ClassifierConfig::default(), 2024, 0)?;
        println!("\n{} ({:.1?})\n{confusion}", flow.name(), start.elapsed());
    }
    Ok(())
}
