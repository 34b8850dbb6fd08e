//! Dataset manifest (JSON).
//!
//! ```json
//! {
//!   "sequences": [
//!     {
//!       "id": "person01_boxing_d1",
//!       "person": 1,
//!       "action": "boxing",
//!       "scenario": 1,
//!       "frame_dir": "frames/person01_boxing_d1",
//!       "annotation_file": "boxes/person01_boxing_d1.txt",
//!       "frame_count": 360
//!     }
//!   ]
//! }
//! ```
//!
//! Relative paths are resolved against the manifest's directory. Frames are
//! `frame_000001.pgm`, `frame_000002.pgm`, … inside `frame_dir`. When
//! `frame_count` is omitted it is the length of the contiguous run of frame
//! files starting at 1.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::pipeline::frame_path;
use super::{Action, BenchError};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceRecord {
    pub id: String,
    pub person: u32,
    pub action: Action,
    pub scenario: u32,
    pub frame_dir: PathBuf,
    pub annotation_file: PathBuf,
    #[serde(default)]
    pub frame_count: Option<usize>,
}

impl SequenceRecord {
    /// Number of frames `T`; only meaningful after [`load_manifest`] filled it in.
    pub fn frames(&self) -> usize {
        self.frame_count.unwrap_or(0)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub sequences: Vec<SequenceRecord>,
}

impl DatasetManifest {
    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&SequenceRecord> {
        self.sequences.iter().find(|r| r.id == id)
    }

    /// Sorted distinct person ids.
    pub fn persons(&self) -> Vec<u32> {
        let mut p: Vec<u32> = self.sequences.iter().map(|r| r.person).collect();
        p.sort_unstable();
        p.dedup();
        p
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    /// Checks ids, labels and paths, resolving relative paths against `base`
    /// and filling in missing frame counts.
    pub fn resolve(mut self, base: &Path) -> Result<Self, BenchError> {
        let mut seen = HashSet::new();
        for record in &mut self.sequences {
            if !seen.insert(record.id.clone()) {
                return Err(BenchError::malformed("manifest", format!("duplicate id {:?}", record.id)));
            }
            if record.person == 0 {
                return Err(BenchError::malformed("manifest", format!("{}: person ids start at 1", record.id)));
            }
            if !(1..=4).contains(&record.scenario) {
                return Err(BenchError::malformed(
                    "manifest",
                    format!("{}: scenario {} outside 1..=4", record.id, record.scenario),
                ));
            }
            for path in [&mut record.frame_dir, &mut record.annotation_file] {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
                if !path.exists() {
                    return Err(BenchError::MissingPath { id: record.id.clone(), path: path.display().to_string() });
                }
            }
            let count = match record.frame_count {
                Some(t) => {
                    let last = frame_path(&record.frame_dir, t.max(1));
                    if !last.exists() {
                        return Err(BenchError::MissingPath { id: record.id.clone(), path: last.display().to_string() });
                    }
                    t
                }
                None => (1..).take_while(|&i| frame_path(&record.frame_dir, i).exists()).count(),
            };
            if count < 2 {
                return Err(BenchError::malformed(
                    "manifest",
                    format!("{}: {} frames, need at least 2", record.id, count),
                ));
            }
            record.frame_count = Some(count);
        }
        Ok(self)
    }
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<DatasetManifest, BenchError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let manifest: DatasetManifest =
        serde_json::from_str(&text).map_err(|e| BenchError::malformed("manifest", e.to_string()))?;
    manifest.resolve(path.parent().unwrap_or(Path::new(".")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn make_sequence(root: &Path, id: &str, frames: usize, with_annotations: bool) {
        let dir = root.join("frames").join(id);
        fs::create_dir_all(&dir).unwrap();
        for i in 1..=frames {
            fs::write(frame_path(&dir, i), b"P5\n1 1\n255\n\0").unwrap();
        }
        if with_annotations {
            fs::create_dir_all(root.join("boxes")).unwrap();
            fs::write(root.join("boxes").join(format!("{id}.txt")), "1 0 0 1 1\n").unwrap();
        }
    }

    fn record(id: &str, person: u32) -> serde_json::Value {
        serde_json::json!({
            "id": id, "person": person, "action": "walking", "scenario": 1,
            "frame_dir": format!("frames/{id}"), "annotation_file": format!("boxes/{id}.txt")
        })
    }

    #[test]
    fn loads_two_sequences() {
        let tmp = tempfile::tempdir().unwrap();
        make_sequence(tmp.path(), "a", 3, true);
        make_sequence(tmp.path(), "b", 2, true);
        let doc = serde_json::json!({ "sequences": [record("a", 1), record("b", 2)] });
        let path = tmp.path().join("manifest.json");
        fs::write(&path, doc.to_string()).unwrap();
        let m = load_manifest(&path).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m.get("a").unwrap().frames(), 3);
        assert!(m.get("b").unwrap().frame_dir.is_absolute());
        assert_eq!(m.persons(), vec![1, 2]);
    }

    #[test]
    fn missing_annotation_names_record() {
        let tmp = tempfile::tempdir().unwrap();
        make_sequence(tmp.path(), "lonely", 3, false);
        let doc = serde_json::json!({ "sequences": [record("lonely", 1)] });
        let path = tmp.path().join("manifest.json");
        fs::write(&path, doc.to_string()).unwrap();
        match load_manifest(&path) {
            Err(BenchError::MissingPath { id, .. }) => assert_eq!(id, "lonely"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_ids_and_bad_labels() {
        let tmp = tempfile::tempdir().unwrap();
        make_sequence(tmp.path(), "a", 3, true);
        let path = tmp.path().join("manifest.json");
        fs::write(&path, serde_json::json!({ "sequences": [record("a", 1), record("a", 2)] }).to_string()).unwrap();
        assert!(matches!(load_manifest(&path), Err(BenchError::Malformed { .. })));
        let mut bad = record("a", 1);
        bad["action"] = "dancing".into();
        fs::write(&path, serde_json::json!({ "sequences": [bad] }).to_string()).unwrap();
        assert!(matches!(load_manifest(&path), Err(BenchError::Malformed { .. })));
    }

    #[test]
    fn too_few_frames() {
        let tmp = tempfile::tempdir().unwrap();
        make_sequence(tmp.path(), "a", 1, true);
        let path = tmp.path().join("manifest.json");
        fs::write(&path, serde_json::json!({ "sequences": [record("a", 1)] }).to_string()).unwrap();
        assert!(matches!(load_manifest(&path), Err(BenchError::Malformed { .. })));
    }
}
