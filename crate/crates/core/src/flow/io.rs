//! Flow field persistence.
//!
//! Binary layout (little endian, Middlebury `.flo` compatible):
//!
//! ```text
//! bytes 0..4   magic tag, the f32 value 202021.25 ("PIEH")
//! bytes 4..8   width  (i32)
//! bytes 8..12  height (i32)
//! then         width*height interleaved (u, v) f32 pairs, row-major
//! ```
//!
//! Text layout: a `flow <width> <height>` line followed by one `u v` line
//! per pixel, row-major. Values are printed in shortest round-trip form.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{FlowError, FlowField};

pub const FLO_MAGIC: [u8; 4] = *b"PIEH";

pub fn encode_flo(flow: &FlowField) -> Vec<u8> {
    let n = flow.width() * flow.height();
    let mut out = Vec::with_capacity(12 + 8 * n);
    out.extend_from_slice(&FLO_MAGIC);
    out.extend_from_slice(&(flow.width() as i32).to_le_bytes());
    out.extend_from_slice(&(flow.height() as i32).to_le_bytes());
    for (u, v) in flow.u().iter().zip(flow.v()) {
        out.extend_from_slice(&(*u as f32).to_le_bytes());
        out.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    out
}

pub fn decode_flo(bytes: &[u8]) -> Result<FlowField, FlowError> {
    if bytes.len() < 12 {
        return Err(FlowError::Malformed("shorter than the 12-byte header".into()));
    }
    if bytes[..4] != FLO_MAGIC {
        return Err(FlowError::Malformed("bad magic tag".into()));
    }
    let word = |i: usize| i32::from_le_bytes(bytes[i..i + 4].try_into().expect("4-byte slice"));
    let (w, h) = (word(4), word(8));
    if w <= 0 || h <= 0 {
        return Err(FlowError::Malformed(format!("invalid dimensions {w}x{h}")));
    }
    let (w, h) = (w as usize, h as usize);
    let n = w * h;
    if bytes.len() != 12 + 8 * n {
        return Err(FlowError::Malformed(format!(
            "expected {} payload bytes, found {}",
            8 * n,
            bytes.len() - 12
        )));
    }
    let mut u = Vec::with_capacity(n);
    let mut v = Vec::with_capacity(n);
    for pair in bytes[12..].chunks_exact(8) {
        u.push(f64::from(f32::from_le_bytes(pair[..4].try_into().expect("4 bytes"))));
        v.push(f64::from(f32::from_le_bytes(pair[4..].try_into().expect("4 bytes"))));
    }
    FlowField::new(w, h, u, v)
}

pub fn save_flo(flow: &FlowField, path: impl AsRef<Path>) -> Result<(), FlowError> {
    fs::write(path, encode_flo(flow))?;
    Ok(())
}

pub fn load_flo(path: impl AsRef<Path>) -> Result<FlowField, FlowError> {
    decode_flo(&fs::read(path)?)
}

pub fn write_flow_text(flow: &FlowField) -> String {
    let mut out = format!("flow {} {}\n", flow.width(), flow.height());
    for (u, v) in flow.u().iter().zip(flow.v()) {
        let _ = writeln!(out, "{u} {v}");
    }
    out
}

pub fn read_flow_text(text: &str) -> Result<FlowField, FlowError> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| FlowError::Malformed("empty text dump".into()))?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    let (w, h) = match parts.as_slice() {
        ["flow", w, h] => (
            w.parse::<usize>().map_err(|e| FlowError::Malformed(e.to_string()))?,
            h.parse::<usize>().map_err(|e| FlowError::Malformed(e.to_string()))?,
        ),
        _ => return Err(FlowError::Malformed(format!("bad header {header:?}"))),
    };
    let mut u = Vec::with_capacity(w * h);
    let mut v = Vec::with_capacity(w * h);
    for (i, line) in lines.filter(|l| !l.trim().is_empty()).enumerate() {
        let mut it = line.split_whitespace().map(str::parse::<f64>);
        match (it.next(), it.next(), it.next()) {
            (Some(Ok(a)), Some(Ok(b)), None) => {
                u.push(a);
                v.push(b);
            }
            _ => return Err(FlowError::Malformed(format!("bad pixel line {}: {line:?}", i + 2))),
        }
    }
    FlowField::new(w, h, u, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        let bytes = encode_flo(&FlowField::constant(3, 2, 1.5, -2.0));
        assert_eq!(&bytes[..4], b"PIEH");
        assert_eq!(f32::from_le_bytes(bytes[..4].try_into().unwrap()), 202021.25);
        assert_eq!(i32::from_le_bytes(bytes[4..8].try_into().unwrap()), 3);
        assert_eq!(i32::from_le_bytes(bytes[8..12].try_into().unwrap()), 2);
        assert_eq!(bytes.len(), 12 + 8 * 6);
        assert_eq!(f32::from_le_bytes(bytes[12..16].try_into().unwrap()), 1.5);
        assert_eq!(f32::from_le_bytes(bytes[16..20].try_into().unwrap()), -2.0);
    }

    #[test]
    fn rejects_truncated_and_bad_magic() {
        let mut bytes = encode_flo(&FlowField::zeros(2, 2));
        bytes.pop();
        assert!(decode_flo(&bytes).is_err());
        let mut bytes = encode_flo(&FlowField::zeros(2, 2));
        bytes[0] = b'X';
        assert!(decode_flo(&bytes).is_err());
    }

    #[test]
    fn text_dump_is_documented_shape() {
        let f = FlowField::from_fn(2, 1, |x, _| (x as f64 + 0.25, -1.0));
        assert_eq!(write_flow_text(&f), "flow 2 1\n0.25 -1\n1.25 -1\n");
        assert!(read_flow_text("flow 2 1\n1 2\n").is_err());
    }

    proptest! {
        #[test]
        fn binary_and_text_round_trip(w in 1usize..6, h in 1usize..6, vals in proptest::collection::vec(-100f32..100f32, 72)) {
            let f = FlowField::from_fn(w, h, |x, y| {
                let i = 2 * (y * w + x);
                (f64::from(vals[i]), f64::from(vals[i + 1]))
            });
            prop_assert_eq!(decode_flo(&encode_flo(&f)).unwrap(), f.clone());
            prop_assert_eq!(read_flow_text(&write_flow_text(&f)).unwrap(), f);
        }
    }
}
