//! Spatio-temporal appearance descriptors built from optical flow.
//!
//! A bounding box is split into an `m × n` grid of patches; each patch gets a
//! `k1`-bin histogram of flow orientations. Concatenated, these form the
//! grid vector of one frame pair. STA1 averages grid vectors over time; STA2
//! histograms the history of every grid-vector component into `k2` bins.

mod accumulator;
mod io;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flow::FlowField;

pub use accumulator::{sta2_bin, Sta2Accumulator};
pub use io::{read_descriptor_csv, write_descriptor_csv, DescriptorRow, DescriptorSet};

/// Flow vectors shorter than this cast no orientation vote.
pub const ZERO_VOTE_EPS: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum StaError {
    #[error("flow vector ({0}, {1}) is too short to have an orientation")]
    ZeroVector(f64, f64),
    #[error("bounding box too small: {width}x{height} pixels after clamping, grid needs {m}x{n}")]
    BoxTooSmall { width: usize, height: usize, m: usize, n: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("no grid vectors")]
    Empty,
    #[error("{weights} weights for {vectors} grid vectors")]
    WeightMismatch { weights: usize, vectors: usize },
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("grid vector length {got}, expected {expected}")]
    LengthMismatch { got: usize, expected: usize },
    #[error("component {index} has value {value} outside [0, 1]")]
    OutOfRange { index: usize, value: f64 },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("descriptor file: {0}")]
    Format(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default)]
pub struct StaParams {
    /// Grid columns.
    pub m: usize,
    /// Grid rows.
    pub n: usize,
    /// Orientation bins per grid histogram.
    pub k1: usize,
    /// Bins per STA2 histogram.
    pub k2: usize,
    /// Weight each orientation vote by the flow magnitude.
    pub weighted: bool,
}

impl Default for StaParams {
    fn default() -> Self {
        Self { m: 8, n: 6, k1: 8, k2: 5, weighted: true }
    }
}

impl StaParams {
    pub fn new(m: usize, n: usize, k1: usize, k2: usize) -> Self {
        Self { m, n, k1, k2, weighted: true }
    }

    pub fn validate(&self) -> Result<(), StaError> {
        if self.m == 0 || self.n == 0 || self.k1 == 0 || self.k2 == 0 {
            return Err(StaError::InvalidParams(format!(
                "m, n, k1, k2 must all be at least 1, got {}x{}x{}x{}",
                self.m, self.n, self.k1, self.k2
            )));
        }
        Ok(())
    }

    /// Length of a grid vector and of an STA1 descriptor.
    pub fn grid_len(&self) -> usize {
        self.m * self.n * self.k1
    }

    /// Length of an STA2 descriptor.
    pub fn sta2_len(&self) -> usize {
        self.grid_len() * self.k2
    }
}

/// Axis-aligned box in pixel coordinates, possibly reaching outside the frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x: i64,
    pub y: i64,
    pub w: i64,
    pub h: i64,
}

impl BoundingBox {
    pub fn new(x: i64, y: i64, w: i64, h: i64) -> Self {
        Self { x, y, w, h }
    }

    /// Intersection with a `width × height` frame as `(x0, y0, x1, y1)`,
    /// end-exclusive. Empty intersections give `x1 <= x0` or `y1 <= y0`.
    pub fn clamp_to(&self, width: usize, height: usize) -> (usize, usize, usize, usize) {
        let clamp = |v: i64, hi: usize| v.clamp(0, hi as i64) as usize;
        let x0 = clamp(self.x, width);
        let y0 = clamp(self.y, height);
        let x1 = clamp(self.x.saturating_add(self.w), width).max(x0);
        let y1 = clamp(self.y.saturating_add(self.h), height).max(y0);
        (x0, y0, x1, y1)
    }
}

/// Concatenated patch histograms of one frame pair: patches row-major,
/// `k1` bins contiguous per patch.
#[derive(Clone, Debug, PartialEq)]
pub struct GridVector {
    values: Vec<f64>,
}

impl GridVector {
    /// Wraps raw component values without validation.
    pub fn from_values(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DescriptorKind {
    Sta1,
    Sta2,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Descriptor {
    pub kind: DescriptorKind,
    pub values: Vec<f64>,
}

impl Descriptor {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Orientation bin of a flow vector. Angles are measured with `atan2(v, u)`
/// in image coordinates (y down), mapped to `[0°, 360°)` and split into `k1`
/// equal sectors starting at 0°.
pub fn orientation_bin(u: f64, v: f64, k1: usize) -> Result<usize, StaError> {
    if !(u.hypot(v) >= ZERO_VOTE_EPS) {
        return Err(StaError::ZeroVector(u, v));
    }
    let mut angle = v.atan2(u).to_degrees();
    if angle < 0.0 {
        angle += 360.0;
    }
    let bin = (angle * k1 as f64 / 360.0).floor() as usize;
    Ok(if bin >= k1 { 0 } else { bin })
}

/// Patch boundary `round(i * extent / parts)` in integer arithmetic.
#[inline]
fn split_point(i: usize, extent: usize, parts: usize) -> usize {
    (2 * i * extent + parts) / (2 * parts)
}

/// Grid histograms of the flow inside `bbox`.
///
/// The box is clamped to the field first. Every pixel with a non-negligible
/// vector votes for its orientation bin, with weight equal to the magnitude
/// when `params.weighted` is set. Each patch histogram is then normalized to
/// sum 1; patches without votes stay all-zero.
pub fn grid_vector(flow: &FlowField, bbox: &BoundingBox, params: &StaParams) -> Result<GridVector, StaError> {
    params.validate()?;
    let (fw, fh) = flow.dimensions();
    let (x0, y0, x1, y1) = bbox.clamp_to(fw, fh);
    let (bw, bh) = (x1 - x0, y1 - y0);
    if bw < params.m || bh < params.n {
        return Err(StaError::BoxTooSmall { width: bw, height: bh, m: params.m, n: params.n });
    }
    let k1 = params.k1;
    let mut values = vec![0.0; params.grid_len()];
    for row in 0..params.n {
        let (py0, py1) = (y0 + split_point(row, bh, params.n), y0 + split_point(row + 1, bh, params.n));
        for col in 0..params.m {
            let (px0, px1) = (x0 + split_point(col, bw, params.m), x0 + split_point(col + 1, bw, params.m));
            let offset = (row * params.m + col) * k1;
            let hist = &mut values[offset..offset + k1];
            for y in py0..py1 {
                for x in px0..px1 {
                    let (u, v) = flow.at(x, y);
                    if let Ok(bin) = orientation_bin(u, v, k1) {
                        hist[bin] += if params.weighted { u.hypot(v) } else { 1.0 };
                    }
                }
            }
            let total: f64 = hist.iter().sum();
            if total > 0.0 {
                hist.iter_mut().for_each(|b| *b /= total);
            }
        }
    }
    Ok(GridVector { values })
}

/// Weighted average of grid vectors; uniform weights `1/t` by default.
///
/// Per component, the weighted terms are summed in ascending order, so the
/// result does not depend on the order of the (weight, vector) pairs.
pub fn sta1(grid_vectors: &[GridVector], weights: Option<&[f64]>) -> Result<Descriptor, StaError> {
    let first = grid_vectors.first().ok_or(StaError::Empty)?;
    let len = first.len();
    if let Some(g) = grid_vectors.iter().find(|g| g.len() != len) {
        return Err(StaError::LengthMismatch { got: g.len(), expected: len });
    }
    let t = grid_vectors.len();
    let uniform;
    let weights = match weights {
        Some(w) => {
            if w.len() != t {
                return Err(StaError::WeightMismatch { weights: w.len(), vectors: t });
            }
            if w.iter().any(|&a| !(a >= 0.0)) {
                return Err(StaError::InvalidWeights("weights must be non-negative".into()));
            }
            let sum: f64 = w.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(StaError::InvalidWeights(format!("weights sum to {sum}, expected 1")));
            }
            w
        }
        None => {
            uniform = vec![1.0 / t as f64; t];
            &uniform
        }
    };
    let mut terms = vec![0.0; t];
    let values = (0..len)
        .map(|i| {
            for (slot, (g, &a)) in terms.iter_mut().zip(grid_vectors.iter().zip(weights)) {
                *slot = a * g.values[i];
            }
            terms.sort_by(f64::total_cmp);
            terms.iter().sum()
        })
        .collect();
    Ok(Descriptor { kind: DescriptorKind::Sta1, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unweighted(m: usize, n: usize, k1: usize) -> StaParams {
        StaParams { m, n, k1, k2: 2, weighted: false }
    }

    #[test]
    fn orientation_bins() {
        assert_eq!(orientation_bin(1.0, 0.0, 4).unwrap(), 0);
        assert_eq!(orientation_bin(0.0, 1.0, 4).unwrap(), 1);
        assert_eq!(orientation_bin(-1.0, 0.0, 8).unwrap(), 4);
        assert_eq!(orientation_bin(0.0, -1.0, 4).unwrap(), 3);
        // just below 360° must not produce bin k1
        assert_eq!(orientation_bin(1.0, -1e-18, 4).unwrap(), 0);
        assert!(matches!(orientation_bin(0.0, 0.0, 4), Err(StaError::ZeroVector(..))));
        assert!(matches!(orientation_bin(1e-7, 0.0, 4), Err(StaError::ZeroVector(..))));
    }

    #[test]
    fn uniform_flow_single_patch() {
        let flow = FlowField::constant(6, 5, 1.0, 0.0);
        let g = grid_vector(&flow, &BoundingBox::new(0, 0, 6, 5), &unweighted(1, 1, 4)).unwrap();
        assert_eq!(g.values(), &[1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn zero_flow_gives_zero_vector() {
        let flow = FlowField::zeros(6, 5);
        let g = grid_vector(&flow, &BoundingBox::new(0, 0, 6, 5), &StaParams::new(2, 2, 4, 3)).unwrap();
        assert!(g.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn two_patches() {
        let flow = FlowField::from_fn(4, 2, |x, _| if x < 2 { (1.0, 0.0) } else { (0.0, 1.0) });
        let g = grid_vector(&flow, &BoundingBox::new(0, 0, 4, 2), &unweighted(2, 1, 4)).unwrap();
        assert_eq!(g.values(), &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn weighting_uses_magnitude() {
        // three short votes right, one long vote down
        let flow = FlowField::from_fn(2, 2, |x, y| if (x, y) == (1, 1) { (0.0, 3.0) } else { (1.0, 0.0) });
        let bbox = BoundingBox::new(0, 0, 2, 2);
        let raw = grid_vector(&flow, &bbox, &unweighted(1, 1, 4)).unwrap();
        assert_eq!(raw.values(), &[0.75, 0.25, 0.0, 0.0]);
        let weighted = grid_vector(&flow, &bbox, &StaParams { weighted: true, ..unweighted(1, 1, 4) }).unwrap();
        assert_eq!(weighted.values(), &[0.5, 0.5, 0.0, 0.0]);
    }

    #[test]
    fn box_is_clamped_and_checked() {
        let flow = FlowField::constant(10, 10, 0.0, 1.0);
        let g = grid_vector(&flow, &BoundingBox::new(-5, -5, 100, 100), &unweighted(2, 2, 4)).unwrap();
        assert_eq!(g.len(), 16);
        let err = grid_vector(&flow, &BoundingBox::new(8, 0, 10, 10), &unweighted(3, 2, 4)).unwrap_err();
        assert!(matches!(err, StaError::BoxTooSmall { width: 2, .. }));
        let err = grid_vector(&flow, &BoundingBox::new(20, 20, 5, 5), &unweighted(1, 1, 4)).unwrap_err();
        assert!(matches!(err, StaError::BoxTooSmall { width: 0, height: 0, .. }));
    }

    #[test]
    fn patches_tile_the_box() {
        for extent in 1..40 {
            for parts in 1..=extent.min(9) {
                let sizes: Vec<usize> =
                    (0..parts).map(|i| split_point(i + 1, extent, parts) - split_point(i, extent, parts)).collect();
                assert_eq!(sizes.iter().sum::<usize>(), extent);
                let (lo, hi) = (sizes.iter().min().unwrap(), sizes.iter().max().unwrap());
                assert!(hi - lo <= 1, "{extent}/{parts}: {sizes:?}");
            }
        }
    }

    #[test]
    fn sta1_examples() {
        let g = GridVector::from_values(vec![0.2, 0.8]);
        assert_eq!(sta1(std::slice::from_ref(&g), None).unwrap().values, g.values());
        let g1 = GridVector::from_values(vec![0.0, 1.0]);
        let g2 = GridVector::from_values(vec![1.0, 0.0]);
        let both = [g1, g2];
        assert_eq!(sta1(&both, None).unwrap().values, vec![0.5, 0.5]);
        assert_eq!(sta1(&both, Some(&[0.25, 0.75])).unwrap().values, vec![0.75, 0.25]);
    }

    #[test]
    fn sta1_errors() {
        assert!(matches!(sta1(&[], None), Err(StaError::Empty)));
        let gs = [GridVector::from_values(vec![1.0]), GridVector::from_values(vec![0.0])];
        assert!(matches!(sta1(&gs, Some(&[1.0])), Err(StaError::WeightMismatch { .. })));
        assert!(matches!(sta1(&gs, Some(&[0.7, 0.7])), Err(StaError::InvalidWeights(_))));
        assert!(matches!(sta1(&gs, Some(&[1.5, -0.5])), Err(StaError::InvalidWeights(_))));
    }

    fn random_flow(seed: u64, w: usize, h: usize) -> FlowField {
        let mut s = seed | 1;
        let mut next = move || {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            (s >> 11) as f64 / (1u64 << 53) as f64
        };
        FlowField::from_fn(w, h, |_, _| (next() * 8.0 - 4.0, next() * 8.0 - 4.0))
    }

    proptest! {
        #[test]
        fn patch_histograms_are_normalized(seed in any::<u64>(), m in 1usize..4, n in 1usize..4, k1 in 1usize..9, weighted: bool) {
            let flow = random_flow(seed, 12, 10);
            let p = StaParams { m, n, k1, k2: 3, weighted };
            let g = grid_vector(&flow, &BoundingBox::new(1, 1, 10, 8), &p).unwrap();
            prop_assert_eq!(g.len(), p.grid_len());
            for patch in g.values().chunks(k1) {
                let s: f64 = patch.iter().sum();
                prop_assert!(s == 0.0 || (s - 1.0).abs() < 1e-12);
                prop_assert!(patch.iter().all(|&v| (0.0..=1.0).contains(&v)));
            }
        }

        #[test]
        fn rotation_shifts_bins(seed in any::<u64>(), k1 in 2usize..9) {
            // vectors placed strictly inside sectors so rotation cannot cross an edge
            let sector = std::f64::consts::TAU / k1 as f64;
            let mut s = seed | 1;
            let mut next = move || { s ^= s << 13; s ^= s >> 7; s ^= s << 17; (s >> 11) as f64 / (1u64 << 53) as f64 };
            let angles: Vec<f64> = (0..48).map(|_| {
                let b = (next() * k1 as f64).floor();
                (b + 0.1 + 0.8 * next()) * sector
            }).collect();
            let mags: Vec<f64> = (0..48).map(|_| 0.5 + next()).collect();
            let make = |shift: f64| FlowField::from_fn(8, 6, |x, y| {
                let i = y * 8 + x;
                let a = angles[i] + shift;
                (mags[i] * a.cos(), mags[i] * a.sin())
            });
            let p = StaParams { m: 2, n: 2, k1, k2: 2, weighted: false };
            let bbox = BoundingBox::new(0, 0, 8, 6);
            let g0 = grid_vector(&make(0.0), &bbox, &p).unwrap();
            let g1 = grid_vector(&make(sector), &bbox, &p).unwrap();
            for (a, b) in g0.values().chunks(k1).zip(g1.values().chunks(k1)) {
                for bin in 0..k1 {
                    prop_assert_eq!(a[bin], b[(bin + 1) % k1]);
                }
            }
        }

        #[test]
        fn sta1_is_order_invariant(seed in any::<u64>(), t in 1usize..8) {
            let p = StaParams { m: 2, n: 2, k1: 4, k2: 3, weighted: true };
            let gs: Vec<GridVector> = (0..t)
                .map(|i| grid_vector(&random_flow(seed.wrapping_add(i as u64), 6, 6), &BoundingBox::new(0, 0, 6, 6), &p).unwrap())
                .collect();
            let mut rev = gs.clone();
            rev.reverse();
            prop_assert_eq!(sta1(&gs, None).unwrap(), sta1(&rev, None).unwrap());
        }
    }
}
