//! Dense optical flow: the displacement field type, its file formats, and
//! the two solvers ([`farneback`] and [`tvl1`]).

pub mod farneback;
mod io;
pub mod tvl1;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::raster::{GrayFrame, RasterError};

pub use farneback::{farneback_flow, polynomial_expansion, FarnebackParams, PolyCoeffs};
pub use io::{decode_flo, encode_flo, load_flo, read_flow_text, save_flo, write_flow_text, FLO_MAGIC};
pub use tvl1::{tvl1_energy, tvl1_flow, TvL1Params};

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("frame too small: {0}")]
    TooSmall(String),
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error("malformed flow file: {0}")]
    Malformed(String),
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Per-pixel displacement from one frame to the next. `u` points right,
/// `v` points down.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowField {
    width: usize,
    height: usize,
    u: Vec<f64>,
    v: Vec<f64>,
}

impl FlowField {
    pub fn new(width: usize, height: usize, u: Vec<f64>, v: Vec<f64>) -> Result<Self, FlowError> {
        let n = width * height;
        if n == 0 || u.len() != n || v.len() != n {
            return Err(FlowError::DimensionMismatch(format!(
                "{}x{} field with {} u and {} v values",
                width,
                height,
                u.len(),
                v.len()
            )));
        }
        Ok(Self { width, height, u, v })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self::constant(width, height, 0.0, 0.0)
    }

    pub fn constant(width: usize, height: usize, u: f64, v: f64) -> Self {
        let n = width * height;
        Self { width, height, u: vec![u; n], v: vec![v; n] }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> (f64, f64)) -> Self {
        let n = width * height;
        let (mut u, mut v) = (Vec::with_capacity(n), Vec::with_capacity(n));
        for y in 0..height {
            for x in 0..width {
                let (a, b) = f(x, y);
                u.push(a);
                v.push(b);
            }
        }
        Self { width, height, u, v }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dimensions(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> (f64, f64) {
        let i = y * self.width + x;
        (self.u[i], self.v[i])
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, u: f64, v: f64) {
        let i = y * self.width + x;
        self.u[i] = u;
        self.v[i] = v;
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().chain(&self.v).all(|x| x.is_finite())
    }

    pub fn max_magnitude(&self) -> f64 {
        self.u
            .iter()
            .zip(&self.v)
            .map(|(a, b)| a.hypot(*b))
            .filter(|m| m.is_finite())
            .fold(0.0, f64::max)
    }

    /// Every vector multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            width: self.width,
            height: self.height,
            u: self.u.iter().map(|x| x * factor).collect(),
            v: self.v.iter().map(|x| x * factor).collect(),
        }
    }

    /// Mirror around the vertical axis; the horizontal component is negated
    /// so the field describes the mirrored motion.
    pub fn flip_horizontal(&self) -> Self {
        Self::from_fn(self.width, self.height, |x, y| {
            let (u, v) = self.at(self.width - 1 - x, y);
            (-u, v)
        })
    }

    /// Bilinear resample to another resolution. Vector values are multiplied
    /// by the per-axis size ratio so displacements stay in target pixels.
    pub fn resized(&self, width: usize, height: usize) -> Self {
        let rx = width as f64 / self.width as f64;
        let ry = height as f64 / self.height as f64;
        let u = crate::raster::resize_bilinear(&self.u_frame(), width, height);
        let v = crate::raster::resize_bilinear(&self.v_frame(), width, height);
        Self {
            width,
            height,
            u: u.into_data().into_iter().map(|x| x * rx).collect(),
            v: v.into_data().into_iter().map(|x| x * ry).collect(),
        }
    }

    pub(crate) fn u_frame(&self) -> GrayFrame {
        GrayFrame::new(self.width, self.height, self.u.clone()).expect("flow dimensions are valid")
    }

    pub(crate) fn v_frame(&self) -> GrayFrame {
        GrayFrame::new(self.width, self.height, self.v.clone()).expect("flow dimensions are valid")
    }

    pub(crate) fn into_components(self) -> (Vec<f64>, Vec<f64>) {
        (self.u, self.v)
    }

    /// Per-pixel Euclidean distance to `other` (endpoint error).
    pub fn endpoint_errors(&self, other: &FlowField) -> Vec<f64> {
        self.u
            .iter()
            .zip(&self.v)
            .zip(other.u.iter().zip(&other.v))
            .map(|((a, b), (c, d))| (a - c).hypot(b - d))
            .collect()
    }
}

/// Median of a slice (mean of the two middle values for even lengths).
/// Returns NaN for an empty slice.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        0.5 * (sorted[mid - 1] + sorted[mid])
    }
}

/// 5×5 (or any odd `size`) median filter with clamped borders.
pub(crate) fn median_filter(values: &[f64], width: usize, height: usize, size: usize) -> Vec<f64> {
    let half = (size / 2) as isize;
    let mut window = Vec::with_capacity(size * size);
    let mut out = vec![0.0; values.len()];
    for y in 0..height as isize {
        for x in 0..width as isize {
            window.clear();
            for dy in -half..=half {
                let yy = (y + dy).clamp(0, height as isize - 1) as usize;
                for dx in -half..=half {
                    let xx = (x + dx).clamp(0, width as isize - 1) as usize;
                    window.push(values[yy * width + xx]);
                }
            }
            let mid = window.len() / 2;
            window.select_nth_unstable_by(mid, f64::total_cmp);
            out[y as usize * width + x as usize] = window[mid];
        }
    }
    out
}

/// Median `(u, v)` over pixels at least `margin` away from every border.
pub fn interior_median(flow: &FlowField, margin: usize) -> (f64, f64) {
    let (w, h) = flow.dimensions();
    let mut us = Vec::new();
    let mut vs = Vec::new();
    for y in margin..h.saturating_sub(margin) {
        for x in margin..w.saturating_sub(margin) {
            let (u, v) = flow.at(x, y);
            us.push(u);
            vs.push(v);
        }
    }
    (median(&us), median(&vs))
}

/// Median endpoint error against a constant ground-truth translation,
/// over pixels at least `margin` away from the border.
pub fn median_endpoint_error(flow: &FlowField, truth: (f64, f64), margin: usize) -> f64 {
    let (w, h) = flow.dimensions();
    let mut errs = Vec::new();
    for y in margin..h.saturating_sub(margin) {
        for x in margin..w.saturating_sub(margin) {
            let (u, v) = flow.at(x, y);
            errs.push((u - truth.0).hypot(v - truth.1));
        }
    }
    median(&errs)
}

/// Which solver to run and with which parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "lowercase")]
pub enum FlowAlgorithm {
    Farneback(FarnebackParams),
    Tvl1(TvL1Params),
}

impl FlowAlgorithm {
    pub fn compute(&self, prev: &GrayFrame, next: &GrayFrame) -> Result<FlowField, FlowError> {
        match self {
            FlowAlgorithm::Farneback(p) => farneback_flow(prev, next, p),
            FlowAlgorithm::Tvl1(p) => tvl1_flow(prev, next, p),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            FlowAlgorithm::Farneback(_) => "farneback",
            FlowAlgorithm::Tvl1(_) => "tvl1",
        }
    }

    /// Compact parameter summary for report rows.
    pub fn label(&self) -> String {
        match self {
            FlowAlgorithm::Farneback(p) => format!("farneback(w={},s={},sigma={})", p.w, p.s, p.sigma),
            FlowAlgorithm::Tvl1(p) => {
                format!("tvl1(lambda={},theta={},tau={})", p.lambda, p.theta, p.tau)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_of_odd_and_even() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(&[]).is_nan());
    }

    #[test]
    fn median_filter_removes_spike() {
        let mut vals = vec![1.0; 49];
        vals[24] = 100.0;
        let out = median_filter(&vals, 7, 7, 5);
        assert!(out.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn resize_scales_vectors() {
        let f = FlowField::constant(8, 6, 1.0, -0.5);
        let up = f.resized(16, 12);
        assert!(up.u().iter().all(|&x| (x - 2.0).abs() < 1e-12));
        assert!(up.v().iter().all(|&x| (x + 1.0).abs() < 1e-12));
    }

    #[test]
    fn flip_negates_u() {
        let f = FlowField::from_fn(3, 1, |x, _| (x as f64, 1.0));
        let g = f.flip_horizontal();
        assert_eq!(g.u(), &[-2.0, -1.0, -0.0]);
        assert_eq!(g.flip_horizontal(), f);
    }

    #[test]
    fn new_checks_lengths() {
        assert!(FlowField::new(2, 2, vec![0.0; 4], vec![0.0; 3]).is_err());
        assert!(FlowField::new(0, 2, vec![], vec![]).is_err());
    }
}
