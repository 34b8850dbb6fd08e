//! Flow visualization with the standard 55-color wheel: hue encodes
//! direction, saturation encodes magnitude, zero motion is white.

use std::io::Write;
use std::path::Path;

use thiserror::Error;

use crate::flow::FlowField;

#[derive(Debug, Error)]
pub enum ColorError {
    #[error("unsupported image extension {0:?} (use .ppm or .png)")]
    UnsupportedFormat(String),
    #[error("png encoding failed: {0}")]
    Png(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// 8-bit RGB raster, row-major, three bytes per pixel.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColorImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl ColorImage {
    pub fn new(width: usize, height: usize) -> Self {
        Self { width, height, data: vec![0; 3 * width * height] }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        let i = 3 * (y * self.width + x);
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn set(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        let i = 3 * (y * self.width + x);
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    /// Binary PPM (P6).
    pub fn encode_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.data);
        out
    }

    pub fn save_ppm(&self, path: impl AsRef<Path>) -> Result<(), ColorError> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        f.write_all(&self.encode_ppm())?;
        f.flush()?;
        Ok(())
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<(), ColorError> {
        image::save_buffer(path, &self.data, self.width as u32, self.height as u32, image::ExtendedColorType::Rgb8)
            .map_err(|e| ColorError::Png(e.to_string()))
    }

    /// Format chosen by extension, `.ppm` or `.png`.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ColorError> {
        let path = path.as_ref();
        match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
            Some("ppm") => self.save_ppm(path),
            Some("png") => self.save_png(path),
            other => Err(ColorError::UnsupportedFormat(other.unwrap_or("").to_string())),
        }
    }
}

/// Segment lengths of the wheel: red-yellow, yellow-green, green-cyan,
/// cyan-blue, blue-magenta, magenta-red.
const SEGMENTS: [usize; 6] = [15, 6, 4, 11, 13, 6];
pub const WHEEL_SIZE: usize = 55;

pub fn color_wheel() -> [[u8; 3]; WHEEL_SIZE] {
    let mut wheel = [[0u8; 3]; WHEEL_SIZE];
    let ramp = |i: usize, n: usize| (255 * i / n) as u8;
    let mut k = 0;
    for (seg, &n) in SEGMENTS.iter().enumerate() {
        for i in 0..n {
            let (up, down) = (ramp(i, n), 255 - ramp(i, n));
            wheel[k] = match seg {
                0 => [255, up, 0],
                1 => [down, 255, 0],
                2 => [0, 255, up],
                3 => [0, down, 255],
                4 => [up, 0, 255],
                _ => [255, 0, down],
            };
            k += 1;
        }
    }
    wheel
}

/// Color of a flow vector already divided by the normalizing magnitude.
pub fn vector_color(u: f64, v: f64, wheel: &[[u8; 3]; WHEEL_SIZE]) -> [u8; 3] {
    let rad = u.hypot(v);
    let a = (-v).atan2(-u) / std::f64::consts::PI;
    let fk = (a + 1.0) / 2.0 * (WHEEL_SIZE - 1) as f64;
    let k0 = (fk.floor() as usize).min(WHEEL_SIZE - 1);
    let k1 = if k0 + 1 == WHEEL_SIZE { 0 } else { k0 + 1 };
    let f = fk - k0 as f64;
    let mut rgb = [0u8; 3];
    for (c, out) in rgb.iter_mut().enumerate() {
        let col0 = f64::from(wheel[k0][c]) / 255.0;
        let col1 = f64::from(wheel[k1][c]) / 255.0;
        let mut col = (1.0 - f) * col0 + f * col1;
        if rad <= 1.0 {
            col = 1.0 - rad * (1.0 - col);
        } else {
            col *= 0.75;
        }
        *out = (255.0 * col).floor() as u8;
    }
    rgb
}

/// Colorized field plus the number of non-finite vectors (drawn black).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Colorized {
    pub image: ColorImage,
    pub non_finite: usize,
}

/// Renders `flow`, normalizing magnitudes by `max_magnitude` or, when not
/// given, by the largest finite magnitude in the field. Below `1e-9` the
/// whole image is white.
pub fn flow_to_color(flow: &FlowField, max_magnitude: Option<f64>) -> Colorized {
    let (w, h) = flow.dimensions();
    let max = max_magnitude.unwrap_or_else(|| flow.max_magnitude());
    let wheel = color_wheel();
    let mut image = ColorImage::new(w, h);
    let mut non_finite = 0;
    for y in 0..h {
        for x in 0..w {
            let (u, v) = flow.at(x, y);
            let rgb = if !(u.is_finite() && v.is_finite()) {
                non_finite += 1;
                [0, 0, 0]
            } else if !(max >= 1e-9) {
                [255, 255, 255]
            } else {
                vector_color(u / max, v / max, &wheel)
            };
            image.set(x, y, rgb);
        }
    }
    Colorized { image, non_finite }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wheel_has_pure_primaries() {
        let wheel = color_wheel();
        assert_eq!(wheel[0], [255, 0, 0]);
        assert_eq!(wheel[15], [255, 255, 0]);
        assert_eq!(wheel[21], [0, 255, 0]);
        assert_eq!(wheel[25], [0, 255, 255]);
        assert_eq!(wheel[36], [0, 0, 255]);
        assert_eq!(wheel[49], [255, 0, 255]);
    }

    #[test]
    fn zero_field_is_white() {
        let c = flow_to_color(&FlowField::zeros(5, 4), None);
        assert!(c.image.data().iter().all(|&b| b == 255));
        assert_eq!(c.non_finite, 0);
    }

    #[test]
    fn non_finite_vectors_are_black_and_counted() {
        let mut f = FlowField::constant(3, 3, 1.0, 0.0);
        f.set(1, 1, f64::NAN, 0.0);
        f.set(2, 2, 0.0, f64::INFINITY);
        let c = flow_to_color(&f, None);
        assert_eq!(c.non_finite, 2);
        assert_eq!(c.image.get(1, 1), [0, 0, 0]);
        assert_ne!(c.image.get(0, 0), [0, 0, 0]);
    }

    #[test]
    fn unit_vectors_hit_the_wheel() {
        let wheel = color_wheel();
        // rightward motion is red; leftward sits halfway round the wheel
        assert_eq!(vector_color(-1.0, 0.0, &wheel), wheel[27]);
        assert_eq!(vector_color(1.0, 0.0, &wheel), [255, 0, 0]);
    }

    #[test]
    fn auto_normalization_is_scale_invariant() {
        let f = FlowField::from_fn(8, 6, |x, y| (x as f64 - 3.0, 2.0 - y as f64 * 0.5));
        let a = flow_to_color(&f, None);
        for c in [0.25, 4.0, 1e3] {
            assert_eq!(flow_to_color(&f.scaled(c), None), a);
        }
    }

    #[test]
    fn ppm_header_and_size() {
        let img = ColorImage::new(4, 2);
        let bytes = img.encode_ppm();
        assert!(bytes.starts_with(b"P6\n4 2\n255\n"));
        assert_eq!(bytes.len(), 11 + 24);
    }

    #[test]
    fn save_by_extension() {
        let tmp = tempfile::tempdir().unwrap();
        let img = flow_to_color(&FlowField::constant(4, 4, 1.0, 1.0), None).image;
        img.save(tmp.path().join("a.png")).unwrap();
        img.save(tmp.path().join("a.ppm")).unwrap();
        let png = image::open(tmp.path().join("a.png")).unwrap().to_rgb8();
        assert_eq!(png.as_raw(), img.data());
        assert!(matches!(img.save(tmp.path().join("a.bmp")), Err(ColorError::UnsupportedFormat(_))));
    }
}
