//! A small six-class "action" dataset with one global motion pattern per
//! class, written in the same layout as a real dataset.
//!
//! | class        | motion                          |
//! |--------------|---------------------------------|
//! | boxing       | translation towards 20°         |
//! | handclapping | translation towards 110°        |
//! | handwaving   | translation towards 200°        |
//! | jogging      | translation towards 290°        |
//! | running      | expansion about the frame center |
//! | walking      | rotation about the frame center  |
//!
//! Angles are in image coordinates (y down). Speed, texture and box
//! placement vary per person and repetition.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{derive_seed, frame_path, write_annotations, Action, BenchError, DatasetManifest, SequenceRecord};
use crate::raster::{save_pgm, GrayFrame};
use crate::sta::BoundingBox;
use crate::synth::smooth_texture;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    pub persons: u32,
    /// Repetitions per person and class, at most 4 (stored as the scenario).
    pub sequences_per_class: u32,
    pub frames: usize,
    pub width: usize,
    pub height: usize,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self { persons: 10, sequences_per_class: 2, frames: 6, width: 64, height: 48, seed: 0 }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<(), BenchError> {
        if self.persons == 0 || !(1..=4).contains(&self.sequences_per_class) || self.frames < 2 {
            return Err(BenchError::malformed(
                "synthetic config",
                "need persons >= 1, 1..=4 sequences per class and at least 2 frames",
            ));
        }
        if self.width < 32 || self.height < 32 {
            return Err(BenchError::malformed("synthetic config", "frames must be at least 32x32"));
        }
        Ok(())
    }
}

/// Frames and per-frame boxes of one generated sequence.
#[derive(Clone, Debug)]
pub struct SyntheticSequence {
    pub id: String,
    pub person: u32,
    pub action: Action,
    pub repetition: u32,
    pub frames: Vec<GrayFrame>,
    pub boxes: BTreeMap<usize, BoundingBox>,
}

/// Maps a point of frame `i` (0-based) back to the reference texture.
fn source_point(action: Action, speed: f64, i: usize, x: f64, y: f64, cx: f64, cy: f64) -> (f64, f64) {
    let t = i as f64;
    match action {
        Action::Boxing | Action::Handclapping | Action::Handwaving | Action::Jogging => {
            let angle = (20.0 + 90.0 * action.index() as f64).to_radians();
            (x - t * speed * angle.cos(), y - t * speed * angle.sin())
        }
        Action::Running => {
            let s = (1.0 + speed / 20.0).powf(t);
            (cx + (x - cx) / s, cy + (y - cy) / s)
        }
        Action::Walking => {
            let phi = -t * speed / 20.0;
            let (dx, dy) = (x - cx, y - cy);
            (cx + dx * phi.cos() - dy * phi.sin(), cy + dx * phi.sin() + dy * phi.cos())
        }
    }
}

pub fn synthetic_sequence(config: &SyntheticConfig, person: u32, action: Action, repetition: u32) -> SyntheticSequence {
    let key = u64::from(person) * 100 + action.index() as u64 * 10 + u64::from(repetition);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, key));
    let speed = rng.gen_range(0.8..1.6);
    let margin = 24;
    let (w, h) = (config.width, config.height);
    let canvas = smooth_texture(w + 2 * margin, h + 2 * margin, rng.gen());
    let (cx, cy) = ((w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0);
    let m = margin as f64;
    let frames = (0..config.frames)
        .map(|i| {
            GrayFrame::from_fn(w, h, |x, y| {
                let (sx, sy) = source_point(action, speed, i, x as f64, y as f64, cx, cy);
                canvas.sample_bilinear(sx + m, sy + m)
            })
        })
        .collect();
    let (bw, bh) = ((w * 3 / 4) as i64, (h * 3 / 4) as i64);
    let (bx, by) = ((w as i64 - bw) / 2, (h as i64 - bh) / 2);
    let boxes = (1..=config.frames)
        .map(|f| (f, BoundingBox::new(bx + rng.gen_range(-2..=2), by + rng.gen_range(-2..=2), bw, bh)))
        .collect();
    SyntheticSequence {
        id: format!("person{person:02}_{}_d{}", action.name(), repetition + 1),
        person,
        action,
        repetition,
        frames,
        boxes,
    }
}

/// All sequences, person-major, then class order, then repetition.
pub fn synthetic_sequences(config: &SyntheticConfig) -> Result<Vec<SyntheticSequence>, BenchError> {
    config.validate()?;
    let mut out = Vec::new();
    for person in 1..=config.persons {
        for action in Action::ALL {
            for rep in 0..config.sequences_per_class {
                out.push(synthetic_sequence(config, person, action, rep));
            }
        }
    }
    Ok(out)
}

/// Writes frames, box files and `manifest.json` below `dir`; returns the
/// manifest path.
pub fn write_synthetic_dataset(dir: impl AsRef<Path>, config: &SyntheticConfig) -> Result<PathBuf, BenchError> {
    let dir = dir.as_ref();
    let mut manifest = DatasetManifest::default();
    fs::create_dir_all(dir.join("boxes"))?;
    for seq in synthetic_sequences(config)? {
        let frame_dir = PathBuf::from("frames").join(&seq.id);
        fs::create_dir_all(dir.join(&frame_dir))?;
        for (i, f) in seq.frames.iter().enumerate() {
            save_pgm(f, frame_path(&dir.join(&frame_dir), i + 1))?;
        }
        let annotation_file = PathBuf::from("boxes").join(format!("{}.txt", seq.id));
        fs::write(dir.join(&annotation_file), write_annotations(&seq.boxes))?;
        manifest.sequences.push(SequenceRecord {
            id: seq.id,
            person: seq.person,
            action: seq.action,
            scenario: seq.repetition + 1,
            frame_dir,
            annotation_file,
            frame_count: Some(seq.frames.len()),
        });
    }
    let path = dir.join("manifest.json");
    fs::write(&path, manifest.to_json())?;
    Ok(path)
}
