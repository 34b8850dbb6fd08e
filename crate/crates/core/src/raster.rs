//! Grayscale frames and the image plumbing shared by both flow solvers:
//! PGM input, separable Gaussian smoothing, gradients, pyramids and
//! bilinear warping.
//!
//! Every operation uses the same border policy: coordinates outside the
//! frame are clamped to the nearest valid pixel.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use thiserror::Error;

use crate::flow::FlowField;

/// Smallest width or height a pyramid level may have.
pub const MIN_PYRAMID_DIM: usize = 16;

#[derive(Debug, Error)]
pub enum RasterError {
    #[error("file not found: {0}")]
    NotFound(String),
    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),
    #[error("malformed image: {0}")]
    Malformed(String),
    #[error("frame too small: {width}x{height}, need at least {min}x{min}")]
    TooSmall { width: usize, height: usize, min: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid pyramid scale {0}, must lie in (0, 1)")]
    InvalidScale(f64),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

/// A single-channel raster with real-valued intensities, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct GrayFrame {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl GrayFrame {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self, RasterError> {
        if width == 0 || height == 0 {
            return Err(RasterError::TooSmall { width, height, min: 1 });
        }
        if data.len() != width * height {
            return Err(RasterError::DimensionMismatch(format!(
                "{}x{} frame needs {} values, got {}",
                width,
                height,
                width * height,
                data.len()
            )));
        }
        Ok(Self { width, height, data })
    }

    /// Frame filled with a single value.
    ///
    /// # Panics
    /// If either dimension is zero.
    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        assert!(width > 0 && height > 0, "frame dimensions must be positive");
        Self { width, height, data: vec![value; width * height] }
    }

    /// Builds a frame by evaluating `f(x, y)` at every pixel.
    ///
    /// # Panics
    /// If either dimension is zero.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(width > 0 && height > 0, "frame dimensions must be positive");
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self { width, height, data }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dimensions(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: f64) {
        self.data[y * self.width + x] = value;
    }

    /// Pixel access with coordinate clamping.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> f64 {
        let xc = x.clamp(0, self.width as isize - 1) as usize;
        let yc = y.clamp(0, self.height as isize - 1) as usize;
        self.data[yc * self.width + xc]
    }

    /// Bilinear sample at a real-valued position, clamping to the border.
    #[inline]
    pub fn sample_bilinear(&self, x: f64, y: f64) -> f64 {
        let x0 = x.floor();
        let y0 = y.floor();
        let fx = x - x0;
        let fy = y - y0;
        let (xi, yi) = (x0 as isize, y0 as isize);
        let p00 = self.get_clamped(xi, yi);
        let p10 = self.get_clamped(xi + 1, yi);
        let p01 = self.get_clamped(xi, yi + 1);
        let p11 = self.get_clamped(xi + 1, yi + 1);
        let top = p00 + fx * (p10 - p00);
        let bottom = p01 + fx * (p11 - p01);
        top + fy * (bottom - top)
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        self.data.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / self.data.len() as f64
    }

    /// Mirror image around the vertical axis.
    pub fn flip_horizontal(&self) -> Self {
        Self::from_fn(self.width, self.height, |x, y| self.get(self.width - 1 - x, y))
    }

    /// Copies the `width`×`height` window whose top-left corner is `(x0, y0)`.
    pub fn crop(&self, x0: usize, y0: usize, width: usize, height: usize) -> Result<Self, RasterError> {
        if width == 0 || height == 0 || x0 + width > self.width || y0 + height > self.height {
            return Err(RasterError::DimensionMismatch(format!(
                "crop {}x{} at ({}, {}) exceeds {}x{} frame",
                width, height, x0, y0, self.width, self.height
            )));
        }
        Ok(Self::from_fn(width, height, |x, y| self.get(x0 + x, y0 + y)))
    }

    /// Linear intensity map so that the result spans `[lo, hi]`.
    /// A constant frame maps to `lo`.
    pub fn rescaled(&self, lo: f64, hi: f64) -> Self {
        let min = self.data.iter().copied().fold(f64::INFINITY, f64::min);
        let max = self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = max - min;
        let data = self
            .data
            .iter()
            .map(|&v| if span > 0.0 { lo + (v - min) / span * (hi - lo) } else { lo })
            .collect();
        Self { width: self.width, height: self.height, data }
    }
}

/// Reads an 8-bit binary PGM (`P5`, maxval 255).
pub fn load_pgm(path: impl AsRef<Path>) -> Result<GrayFrame, RasterError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| match e.kind() {
        io::ErrorKind::NotFound => RasterError::NotFound(path.display().to_string()),
        _ => RasterError::Io(e),
    })?;
    decode_pgm(&bytes)
}

/// Decodes an in-memory `P5` image.
pub fn decode_pgm(bytes: &[u8]) -> Result<GrayFrame, RasterError> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        let magic = String::from_utf8_lossy(&bytes[..bytes.len().min(2)]).into_owned();
        return Err(RasterError::UnsupportedFormat(format!("magic {magic:?}, expected \"P5\"")));
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        *field = next_header_number(bytes, &mut pos)?;
    }
    let [width, height, maxval] = fields;
    if maxval != 255 {
        return Err(RasterError::UnsupportedFormat(format!("maxval {maxval}, expected 255")));
    }
    if width == 0 || height == 0 {
        return Err(RasterError::Malformed(format!("zero dimension {width}x{height}")));
    }
    // exactly one whitespace byte separates the header from the payload
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(RasterError::Malformed("missing whitespace after header".into()));
    }
    pos += 1;
    let needed = width * height;
    let payload = &bytes[pos..];
    if payload.len() < needed {
        return Err(RasterError::Malformed(format!(
            "truncated payload: {} bytes for {}x{} image",
            payload.len(),
            width,
            height
        )));
    }
    let data = payload[..needed].iter().map(|&b| f64::from(b)).collect();
    GrayFrame::new(width, height, data)
}

fn next_header_number(bytes: &[u8], pos: &mut usize) -> Result<usize, RasterError> {
    loop {
        match bytes.get(*pos) {
            None => return Err(RasterError::Malformed("truncated header".into())),
            Some(b'#') => {
                while *pos < bytes.len() && bytes[*pos] != b'\n' {
                    *pos += 1;
                }
            }
            Some(b) if b.is_ascii_whitespace() => *pos += 1,
            Some(_) => break,
        }
    }
    let start = *pos;
    while *pos < bytes.len() && bytes[*pos].is_ascii_digit() {
        *pos += 1;
    }
    if start == *pos {
        return Err(RasterError::Malformed(format!("expected a number at byte {start}")));
    }
    std::str::from_utf8(&bytes[start..*pos])
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| RasterError::Malformed("header number out of range".into()))
}

/// Encodes a frame as `P5`. Intensities are rounded and clamped to `0..=255`.
pub fn encode_pgm(frame: &GrayFrame) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", frame.width, frame.height).into_bytes();
    out.extend(frame.data.iter().map(|&v| v.round().clamp(0.0, 255.0) as u8));
    out
}

pub fn save_pgm(frame: &GrayFrame, path: impl AsRef<Path>) -> Result<(), RasterError> {
    let mut file = io::BufWriter::new(fs::File::create(path)?);
    file.write_all(&encode_pgm(frame))?;
    file.flush()?;
    Ok(())
}

/// Normalized 1-D Gaussian taps, half-width `ceil(3 sigma)`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let half = (3.0 * sigma).ceil() as isize;
    let mut taps: Vec<f64> = (-half..=half)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
    taps
}

/// Correlates every row, then every column, with a symmetric odd-length kernel.
pub(crate) fn convolve_separable(frame: &GrayFrame, kernel: &[f64]) -> GrayFrame {
    let half = (kernel.len() / 2) as isize;
    let (w, h) = frame.dimensions();
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, &tap) in kernel.iter().enumerate() {
                acc += tap * frame.get_clamped(x as isize + k as isize - half, y as isize);
            }
            tmp[y * w + x] = acc;
        }
    }
    let tmp = GrayFrame { width: w, height: h, data: tmp };
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, &tap) in kernel.iter().enumerate() {
                acc += tap * tmp.get_clamped(x as isize, y as isize + k as isize - half);
            }
            out[y * w + x] = acc;
        }
    }
    GrayFrame { width: w, height: h, data: out }
}

/// Separable Gaussian blur. `sigma == 0` returns the input unchanged.
pub fn gaussian_smooth(frame: &GrayFrame, sigma: f64) -> GrayFrame {
    if sigma <= 0.0 {
        return frame.clone();
    }
    convolve_separable(frame, &gaussian_kernel(sigma))
}

/// Central differences inside, one-sided differences on the border.
pub fn central_gradient(frame: &GrayFrame) -> Result<(GrayFrame, GrayFrame), RasterError> {
    let (w, h) = frame.dimensions();
    if w < 3 || h < 3 {
        return Err(RasterError::TooSmall { width: w, height: h, min: 3 });
    }
    let gx = GrayFrame::from_fn(w, h, |x, y| match x {
        0 => frame.get(1, y) - frame.get(0, y),
        _ if x == w - 1 => frame.get(w - 1, y) - frame.get(w - 2, y),
        _ => (frame.get(x + 1, y) - frame.get(x - 1, y)) / 2.0,
    });
    let gy = GrayFrame::from_fn(w, h, |x, y| match y {
        0 => frame.get(x, 1) - frame.get(x, 0),
        _ if y == h - 1 => frame.get(x, h - 1) - frame.get(x, h - 2),
        _ => (frame.get(x, y + 1) - frame.get(x, y - 1)) / 2.0,
    });
    Ok((gx, gy))
}

/// Bilinear resampling to an arbitrary size with pixel-center alignment.
pub fn resize_bilinear(frame: &GrayFrame, width: usize, height: usize) -> GrayFrame {
    let sx = frame.width as f64 / width as f64;
    let sy = frame.height as f64 / height as f64;
    GrayFrame::from_fn(width, height, |x, y| {
        let src_x = (x as f64 + 0.5) * sx - 0.5;
        let src_y = (y as f64 + 0.5) * sy - 0.5;
        frame.sample_bilinear(src_x, src_y)
    })
}

/// Coarse-to-fine image stack, level 0 at full resolution.
#[derive(Clone, Debug)]
pub struct Pyramid {
    levels: Vec<GrayFrame>,
    scale: f64,
}

impl Pyramid {
    pub fn levels(&self) -> &[GrayFrame] {
        &self.levels
    }

    pub fn level(&self, index: usize) -> &GrayFrame {
        &self.levels[index]
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn sizes(&self) -> Vec<(usize, usize)> {
        self.levels.iter().map(GrayFrame::dimensions).collect()
    }
}

/// Number of levels that fit before a dimension would drop below
/// [`MIN_PYRAMID_DIM`]. Level 0 always counts.
pub fn pyramid_level_count(width: usize, height: usize, levels: usize, scale: f64) -> usize {
    let mut count = 1;
    while count < levels {
        let (w, h) = pyramid_level_size(width, height, scale, count);
        if w.min(h) < MIN_PYRAMID_DIM {
            break;
        }
        count += 1;
    }
    count
}

/// Dimensions of level `level` relative to the full-resolution size.
pub fn pyramid_level_size(width: usize, height: usize, scale: f64, level: usize) -> (usize, usize) {
    let factor = scale.powi(level as i32);
    let w = ((width as f64 * factor).round() as usize).max(1);
    let h = ((height as f64 * factor).round() as usize).max(1);
    (w, h)
}

/// Builds a smooth-then-subsample pyramid, clipped so that no level has a
/// dimension below [`MIN_PYRAMID_DIM`] (level 0 is kept regardless).
pub fn build_pyramid(frame: &GrayFrame, levels: usize, scale: f64) -> Result<Pyramid, RasterError> {
    if !(scale > 0.0 && scale < 1.0) {
        return Err(RasterError::InvalidScale(scale));
    }
    let (w0, h0) = frame.dimensions();
    let count = pyramid_level_count(w0, h0, levels.max(1), scale);
    let sigma = 0.8 * (1.0 / (scale * scale) - 1.0).sqrt();
    let kernel = gaussian_kernel(sigma);
    let mut out = Vec::with_capacity(count);
    out.push(frame.clone());
    for level in 1..count {
        let (w, h) = pyramid_level_size(w0, h0, scale, level);
        let smoothed = convolve_separable(&out[level - 1], &kernel);
        out.push(resize_bilinear(&smoothed, w, h));
    }
    Ok(Pyramid { levels: out, scale })
}

/// Samples `frame` at `(x + u, y + v)` for every pixel.
pub fn warp_bilinear(frame: &GrayFrame, flow: &FlowField) -> Result<GrayFrame, RasterError> {
    if frame.dimensions() != flow.dimensions() {
        return Err(RasterError::DimensionMismatch(format!(
            "frame {:?} vs flow {:?}",
            frame.dimensions(),
            flow.dimensions()
        )));
    }
    let (u, v) = (flow.u(), flow.v());
    let w = frame.width;
    Ok(GrayFrame::from_fn(w, frame.height, |x, y| {
        let i = y * w + x;
        frame.sample_bilinear(x as f64 + u[i], y as f64 + v[i])
    }))
}
