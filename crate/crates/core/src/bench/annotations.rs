//! Per-frame bounding boxes, one `frame x y w h` line per annotated frame.
//! Blank lines and lines starting with `#` are ignored; frames are 1-indexed.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::BenchError;
use crate::sta::BoundingBox;

pub fn parse_annotations(text: &str, frame_count: usize) -> Result<BTreeMap<usize, BoundingBox>, BenchError> {
    let mut boxes = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |detail: String| BenchError::malformed("annotation", format!("line {}: {detail}", lineno + 1));
        let fields: Vec<f64> = line
            .split_whitespace()
            .map(|f| f.parse::<f64>().map_err(|_| bad(format!("non-numeric field {f:?}"))))
            .collect::<Result<_, _>>()?;
        if fields.len() != 5 || fields.iter().any(|v| !v.is_finite()) {
            return Err(bad(format!("expected 5 numeric fields, found {}", fields.len())));
        }
        let frame = fields[0];
        if frame.fract() != 0.0 || frame < 1.0 || frame > frame_count as f64 {
            return Err(bad(format!("frame index {frame} outside 1..={frame_count}")));
        }
        if fields[3] < 0.0 || fields[4] < 0.0 {
            return Err(bad("negative box extent".into()));
        }
        let r = |v: f64| v.round() as i64;
        boxes.insert(frame as usize, BoundingBox::new(r(fields[1]), r(fields[2]), r(fields[3]), r(fields[4])));
    }
    Ok(boxes)
}

pub fn load_annotations(path: impl AsRef<Path>, frame_count: usize) -> Result<BTreeMap<usize, BoundingBox>, BenchError> {
    parse_annotations(&std::fs::read_to_string(path)?, frame_count)
}

pub fn write_annotations(boxes: &BTreeMap<usize, BoundingBox>) -> String {
    let mut out = String::new();
    for (frame, b) in boxes {
        let _ = writeln!(out, "{frame} {} {} {} {}", b.x, b.y, b.w, b.h);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_line() {
        let boxes = parse_annotations("12 30 40 25 60\n", 20).unwrap();
        assert_eq!(boxes.len(), 1);
        assert_eq!(boxes[&12], BoundingBox::new(30, 40, 25, 60));
    }

    #[test]
    fn empty_file_has_no_boxes() {
        assert!(parse_annotations("", 10).unwrap().is_empty());
        assert!(parse_annotations("# header only\n\n", 10).unwrap().is_empty());
    }

    #[test]
    fn malformed_lines() {
        for text in ["12 30 40 25\n", "12 30 forty 25 60\n", "0 1 1 1 1\n", "11 1 1 1 1\n", "3 1 1 -4 1\n", "2.5 1 1 1 1\n"] {
            assert!(matches!(parse_annotations(text, 10), Err(BenchError::Malformed { .. })), "{text:?}");
        }
    }

    #[test]
    fn real_valued_boxes_are_rounded_and_round_trip() {
        let boxes = parse_annotations("3 -2.4 7.6 20 30.2\n1 0 0 5 5\n", 5).unwrap();
        assert_eq!(boxes[&3], BoundingBox::new(-2, 8, 20, 30));
        assert_eq!(parse_annotations(&write_annotations(&boxes), 5).unwrap(), boxes);
    }
}
