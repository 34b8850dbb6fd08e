//! Describes a dataset given by a manifest and annotation files, the layout
//! used for real recordings, and writes one descriptor CSV row per sequence.
//!
//! ```text
//! cargo run --release --example manifest_dataset -- manifest.json descriptors.csv
//! ```
//!
//! Without arguments, a tiny manifest is built on the fly from hand-written
//! annotation files to show both formats.

use std::error::Error;
use std::path::PathBuf;

use staflow::bench::synthetic::{synthetic_sequence, SyntheticConfig};
use staflow::bench::{describe_dataset, frame_path, load_manifest, Action, DatasetManifest, DescribeOptions, SequenceRecord};
use staflow::flow::{FarnebackParams, FlowAlgorithm};
use staflow::raster::save_pgm;
use staflow::sta::{write_descriptor_csv, StaParams};

fn demo_manifest(dir: &std::path::Path) -> Result<PathBuf, Box<dyn Error>> {
    let mut manifest = DatasetManifest::default();
    let config = SyntheticConfig::default();
    for (person, action) in [(1, Action::Boxing), (2, Action::Walking)] {
        let seq = synthetic_sequence(&config, person, action, 0);
        let frames = dir.join(&seq.id);
        std::fs::create_dir_all(&frames)?;
        for (i, f) in seq.frames.iter().enumerate() {
            save_pgm(f, frame_path(&frames, i + 1))?;
        }
        // frame x y w h, one line per annotated frame; the last frame needs no box
        let boxes = "# frame x y w h\n1 8 6 48 36\n2 8 6 48 36\n3 9 6 48 36\n4 9 7 48 36\n5 10 7 48 36\n";
        std::fs::write(dir.join(format!("{}.txt", seq.id)), boxes)?;
        manifest.sequences.push(SequenceRecord {
            id: seq.id.clone(),
            person,
            action,
            scenario: 1,
            frame_dir: PathBuf::from(&seq.id),
            annotation_file: PathBuf::from(format!("{}.txt", seq.id)),
            frame_count: None,
        });
    }
    let path = dir.join("manifest.json");
    std::fs::write(&path, manifest.to_json())?;
    println!("{}", manifest.to_json());
    Ok(path)
}

fn main() -> Result<(), Box<dyn Error>> {
    let mut args = std::env::args().skip(1);
    let manifest_path = match args.next() {
        Some(p) => PathBuf::from(p),
        None => {
            let dir = std::env::temp_dir().join("staflow-manifest-demo");
            std::fs::create_dir_all(&dir)?;
            demo_manifest(&dir)?
        }
    };
    let out = args.next().map_or_else(|| std::env::temp_dir().join("staflow-descriptors.csv"), PathBuf::from);

    let manifest = load_manifest(&manifest_path)?;
    let flow = FlowAlgorithm::Farneback(FarnebackParams::default());
    let described = describe_dataset(&manifest, &flow, &[StaParams::default()], &DescribeOptions::default(), 0)?;
    for s in &described.skipped {
        eprintln!("skipped {}: {}", s.id, s.reason);
    }
    write_descriptor_csv(&described.rows[0], std::fs::File::create(&out)?)?;
    println!("{} descriptors of length {} written to {}", described.rows[0].len(), StaParams::default().sta2_len(), out.display());
    Ok(())
}
