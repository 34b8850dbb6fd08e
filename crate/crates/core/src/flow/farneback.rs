//! Two-frame motion estimation from polynomial expansion.
//!
//! Each pixel neighborhood is approximated by a quadratic
//! `f(x) ≈ xᵀAx + bᵀx + c`, fitted by weighted least squares with a
//! Gaussian applicability. A neighborhood that moved by `d` between two
//! frames satisfies `A d = -(b₂ - b₁) / 2`; this constraint is collected
//! per pixel, averaged over a `(2w+1)²` box and solved in the least-squares
//! sense. A pyramid provides the initial displacement for each finer level.

use serde::{Deserialize, Serialize};

use super::{FlowError, FlowField};
use crate::raster::{build_pyramid, GrayFrame};

/// Added to the 2×2 determinant so textureless regions do not blow up.
const DET_EPS: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FarnebackParams {
    /// Averaging half-width; the averaging window is `2w + 1` pixels wide.
    pub w: usize,
    /// Polynomial-expansion neighborhood size (odd).
    pub s: usize,
    /// Standard deviation of the Gaussian applicability.
    pub sigma: f64,
    pub levels: usize,
    pub scale: f64,
    /// Displacement refinement passes per pyramid level.
    pub iterations: usize,
}

impl Default for FarnebackParams {
    fn default() -> Self {
        Self { w: 2, s: 5, sigma: 1.1, levels: 3, scale: 0.5, iterations: 3 }
    }
}

impl FarnebackParams {
    pub fn validate(&self) -> Result<(), FlowError> {
        let bad = |msg: String| Err(FlowError::InvalidParams(msg));
        if self.w < 1 {
            return bad("w must be at least 1".into());
        }
        if self.s < 3 || self.s % 2 == 0 {
            return bad(format!("s must be odd and at least 3, got {}", self.s));
        }
        if !(self.sigma > 0.0) {
            return bad(format!("sigma must be positive, got {}", self.sigma));
        }
        if self.levels < 1 || self.iterations < 1 {
            return bad("levels and iterations must be at least 1".into());
        }
        if !(self.scale > 0.0 && self.scale < 1.0) {
            return bad(format!("scale must lie in (0, 1), got {}", self.scale));
        }
        Ok(())
    }
}

/// Per-pixel quadratic model of the local intensity surface.
#[derive(Clone, Debug)]
pub struct PolyCoeffs {
    width: usize,
    height: usize,
    c: Vec<f64>,
    b1: Vec<f64>,
    b2: Vec<f64>,
    a11: Vec<f64>,
    a22: Vec<f64>,
    /// Off-diagonal entry of the symmetric `A`.
    a12: Vec<f64>,
}

impl PolyCoeffs {
    pub fn dimensions(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn a(&self, x: usize, y: usize) -> [[f64; 2]; 2] {
        let i = y * self.width + x;
        [[self.a11[i], self.a12[i]], [self.a12[i], self.a22[i]]]
    }

    pub fn b(&self, x: usize, y: usize) -> [f64; 2] {
        let i = y * self.width + x;
        [self.b1[i], self.b2[i]]
    }

    pub fn c(&self, x: usize, y: usize) -> f64 {
        self.c[y * self.width + x]
    }
}

/// Inverts a small dense matrix by Gauss-Jordan elimination with partial
/// pivoting. Used once per expansion on the 6×6 Gram matrix.
fn invert<const N: usize>(m: [[f64; N]; N]) -> Option<[[f64; N]; N]> {
    let mut a = m;
    let mut inv = [[0.0; N]; N];
    for (i, row) in inv.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for col in 0..N {
        let pivot = (col..N).max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let p = a[col][col];
        for k in 0..N {
            a[col][k] /= p;
            inv[col][k] /= p;
        }
        for r in 0..N {
            if r != col {
                let f = a[r][col];
                if f != 0.0 {
                    for k in 0..N {
                        a[r][k] -= f * a[col][k];
                        inv[r][k] -= f * inv[col][k];
                    }
                }
            }
        }
    }
    Some(inv)
}

/// Weighted least-squares fit of a quadratic to the `s×s` neighborhood of
/// every pixel, with Gaussian applicability of standard deviation `sigma`.
///
/// The six weighted moments `Σ a·φₖ·f` (basis `1, x, y, x², y², xy`) are
/// computed by separable correlation and mapped to coefficients through the
/// inverse Gram matrix, which is the same for every pixel because borders
/// are handled by coordinate clamping.
pub fn polynomial_expansion(frame: &GrayFrame, s: usize, sigma: f64) -> Result<PolyCoeffs, FlowError> {
    let (w, h) = frame.dimensions();
    if s < 3 || s % 2 == 0 {
        return Err(FlowError::InvalidParams(format!("s must be odd and at least 3, got {s}")));
    }
    if !(sigma > 0.0) {
        return Err(FlowError::InvalidParams(format!("sigma must be positive, got {sigma}")));
    }
    if s > w.min(h) {
        return Err(FlowError::TooSmall(format!("{w}x{h} frame is smaller than neighborhood {s}")));
    }
    let n = (s / 2) as isize;
    let offsets: Vec<f64> = (-n..=n).map(|i| i as f64).collect();
    let g: Vec<f64> = offsets.iter().map(|&t| (-t * t / (2.0 * sigma * sigma)).exp()).collect();

    // Gram matrix of the basis under the applicability.
    let basis = |x: f64, y: f64| [1.0, x, y, x * x, y * y, x * y];
    let mut gram = [[0.0; 6]; 6];
    for (j, &dy) in offsets.iter().enumerate() {
        for (i, &dx) in offsets.iter().enumerate() {
            let a = g[i] * g[j];
            let phi = basis(dx, dy);
            for k in 0..6 {
                for l in 0..6 {
                    gram[k][l] += a * phi[k] * phi[l];
                }
            }
        }
    }
    let ginv = invert(gram).ok_or_else(|| FlowError::InvalidParams("singular expansion basis".into()))?;

    // horizontal pass: Σ g f, Σ g x f, Σ g x² f
    let npx = w * h;
    let mut r0 = vec![0.0; npx];
    let mut r1 = vec![0.0; npx];
    let mut r2 = vec![0.0; npx];
    for y in 0..h {
        for x in 0..w {
            let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
            for (k, &t) in offsets.iter().enumerate() {
                let f = frame.get_clamped(x as isize + t as isize, y as isize);
                let gf = g[k] * f;
                s0 += gf;
                s1 += gf * t;
                s2 += gf * t * t;
            }
            let i = y * w + x;
            r0[i] = s0;
            r1[i] = s1;
            r2[i] = s2;
        }
    }

    let mut out = PolyCoeffs {
        width: w,
        height: h,
        c: vec![0.0; npx],
        b1: vec![0.0; npx],
        b2: vec![0.0; npx],
        a11: vec![0.0; npx],
        a22: vec![0.0; npx],
        a12: vec![0.0; npx],
    };
    let clamp_row = |y: isize| y.clamp(0, h as isize - 1) as usize;
    for y in 0..h {
        for x in 0..w {
            // moments in basis order: 1, x, y, x², y², xy
            let mut m = [0.0; 6];
            for (k, &t) in offsets.iter().enumerate() {
                let j = clamp_row(y as isize + t as isize) * w + x;
                let gk = g[k];
                m[0] += gk * r0[j];
                m[1] += gk * r1[j];
                m[2] += gk * t * r0[j];
                m[3] += gk * r2[j];
                m[4] += gk * t * t * r0[j];
                m[5] += gk * t * r1[j];
            }
            let mut r = [0.0; 6];
            for k in 0..6 {
                r[k] = (0..6).map(|l| ginv[k][l] * m[l]).sum();
            }
            let i = y * w + x;
            out.c[i] = r[0];
            out.b1[i] = r[1];
            out.b2[i] = r[2];
            out.a11[i] = r[3];
            out.a22[i] = r[4];
            out.a12[i] = r[5] / 2.0;
        }
    }
    Ok(out)
}

/// Box filter of half-width `half` along both axes, clamped borders.
fn box_filter(values: &[f64], width: usize, height: usize, half: usize) -> Vec<f64> {
    let half = half as isize;
    let norm = 1.0 / (2 * half + 1) as f64;
    let mut tmp = vec![0.0; values.len()];
    for y in 0..height {
        let row = &values[y * width..(y + 1) * width];
        for x in 0..width as isize {
            let mut acc = 0.0;
            for dx in -half..=half {
                acc += row[(x + dx).clamp(0, width as isize - 1) as usize];
            }
            tmp[y * width + x as usize] = acc * norm;
        }
    }
    let mut out = vec![0.0; values.len()];
    for y in 0..height as isize {
        for x in 0..width {
            let mut acc = 0.0;
            for dy in -half..=half {
                acc += tmp[(y + dy).clamp(0, height as isize - 1) as usize * width + x];
            }
            out[y as usize * width + x] = acc * norm;
        }
    }
    out
}

fn sample(channel: &[f64], width: usize, height: usize, x: f64, y: f64) -> f64 {
    let x = x.clamp(0.0, (width - 1) as f64);
    let y = y.clamp(0.0, (height - 1) as f64);
    let (x0, y0) = (x.floor() as usize, y.floor() as usize);
    let (x1, y1) = ((x0 + 1).min(width - 1), (y0 + 1).min(height - 1));
    let (fx, fy) = (x - x0 as f64, y - y0 as f64);
    let at = |xx: usize, yy: usize| channel[yy * width + xx];
    let top = at(x0, y0) + fx * (at(x1, y0) - at(x0, y0));
    let bottom = at(x0, y1) + fx * (at(x1, y1) - at(x0, y1));
    top + fy * (bottom - top)
}

/// One refinement pass at a single resolution: rebuild the per-pixel
/// constraints around the current displacement, average them, solve.
fn refine(r0: &PolyCoeffs, r1: &PolyCoeffs, flow: &FlowField, half: usize) -> FlowField {
    let (w, h) = r0.dimensions();
    let n = w * h;
    let mut g11 = vec![0.0; n];
    let mut g12 = vec![0.0; n];
    let mut g22 = vec![0.0; n];
    let mut h1 = vec![0.0; n];
    let mut h2 = vec![0.0; n];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let (du, dv) = flow.at(x, y);
            let (sx, sy) = (x as f64 + du, y as f64 + dv);
            let a11 = 0.5 * (r0.a11[i] + sample(&r1.a11, w, h, sx, sy));
            let a22 = 0.5 * (r0.a22[i] + sample(&r1.a22, w, h, sx, sy));
            let a12 = 0.5 * (r0.a12[i] + sample(&r1.a12, w, h, sx, sy));
            let db1 = -0.5 * (sample(&r1.b1, w, h, sx, sy) - r0.b1[i]) + a11 * du + a12 * dv;
            let db2 = -0.5 * (sample(&r1.b2, w, h, sx, sy) - r0.b2[i]) + a12 * du + a22 * dv;
            g11[i] = a11 * a11 + a12 * a12;
            g12[i] = a11 * a12 + a12 * a22;
            g22[i] = a12 * a12 + a22 * a22;
            h1[i] = a11 * db1 + a12 * db2;
            h2[i] = a12 * db1 + a22 * db2;
        }
    }
    let g11 = box_filter(&g11, w, h, half);
    let g12 = box_filter(&g12, w, h, half);
    let g22 = box_filter(&g22, w, h, half);
    let h1 = box_filter(&h1, w, h, half);
    let h2 = box_filter(&h2, w, h, half);
    FlowField::from_fn(w, h, |x, y| {
        let i = y * w + x;
        let idet = 1.0 / (g11[i] * g22[i] - g12[i] * g12[i] + DET_EPS);
        ((g22[i] * h1[i] - g12[i] * h2[i]) * idet, (g11[i] * h2[i] - g12[i] * h1[i]) * idet)
    })
}

/// Dense flow from `prev` to `next` by coarse-to-fine polynomial expansion.
pub fn farneback_flow(prev: &GrayFrame, next: &GrayFrame, params: &FarnebackParams) -> Result<FlowField, FlowError> {
    params.validate()?;
    if prev.dimensions() != next.dimensions() {
        return Err(FlowError::DimensionMismatch(format!(
            "prev {:?} vs next {:?}",
            prev.dimensions(),
            next.dimensions()
        )));
    }
    let p0 = build_pyramid(prev, params.levels, params.scale)?;
    let p1 = build_pyramid(next, params.levels, params.scale)?;
    let mut flow: Option<FlowField> = None;
    for level in (0..p0.len()).rev() {
        let (f0, f1) = (p0.level(level), p1.level(level));
        let (w, h) = f0.dimensions();
        let mut current = match flow.take() {
            Some(coarse) => coarse.resized(w, h),
            None => FlowField::zeros(w, h),
        };
        let r0 = polynomial_expansion(f0, params.s, params.sigma)?;
        let r1 = polynomial_expansion(f1, params.s, params.sigma)?;
        for _ in 0..params.iterations {
            current = refine(&r0, &r1, &current, params.w);
        }
        flow = Some(current);
    }
    Ok(flow.expect("pyramid has at least one level"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::gaussian_smooth;
    use nalgebra::{DMatrix, DVector};

    /// Direct weighted least squares for one pixel: build the design matrix
    /// over the window and solve the normal equations with a dense solver.
    fn oracle_fit(frame: &GrayFrame, x: usize, y: usize, s: usize, sigma: f64) -> [f64; 6] {
        let n = (s / 2) as isize;
        let rows = s * s;
        let mut design = DMatrix::zeros(rows, 6);
        let mut weights = DVector::zeros(rows);
        let mut target = DVector::zeros(rows);
        let mut r = 0;
        for dy in -n..=n {
            for dx in -n..=n {
                let (fx, fy) = (dx as f64, dy as f64);
                let row = [1.0, fx, fy, fx * fx, fy * fy, fx * fy];
                for (k, v) in row.iter().enumerate() {
                    design[(r, k)] = *v;
                }
                weights[r] = (-(fx * fx + fy * fy) / (2.0 * sigma * sigma)).exp();
                target[r] = frame.get_clamped(x as isize + dx, y as isize + dy);
                r += 1;
            }
        }
        let wmat = DMatrix::from_diagonal(&weights);
        let lhs = design.transpose() * &wmat * &design;
        let rhs = design.transpose() * &wmat * &target;
        let sol = lhs.lu().solve(&rhs).expect("well-posed fit");
        [sol[0], sol[1], sol[2], sol[3], sol[4], sol[5] / 2.0]
    }

    fn coeff_vec(p: &PolyCoeffs, x: usize, y: usize) -> [f64; 6] {
        let a = p.a(x, y);
        let b = p.b(x, y);
        [p.c(x, y), b[0], b[1], a[0][0], a[1][1], a[0][1]]
    }

    #[test]
    fn constant_frame() {
        let f = GrayFrame::filled(12, 10, 9.0);
        let p = polynomial_expansion(&f, 5, 1.1).unwrap();
        for y in 2..8 {
            for x in 2..10 {
                let c = coeff_vec(&p, x, y);
                assert!((c[0] - 9.0).abs() < 1e-6);
                assert!(c[1..].iter().all(|v| v.abs() < 1e-6), "{c:?}");
            }
        }
    }

    #[test]
    fn ramp_and_quadratic() {
        let ramp = GrayFrame::from_fn(12, 10, |x, _| x as f64);
        let p = polynomial_expansion(&ramp, 5, 1.1).unwrap();
        for y in 2..8 {
            for x in 2..10 {
                let c = coeff_vec(&p, x, y);
                assert!((c[1] - 1.0).abs() < 1e-6 && c[2].abs() < 1e-6);
                assert!(c[3].abs() < 1e-6 && c[4].abs() < 1e-6 && c[5].abs() < 1e-6);
            }
        }
        let quad = GrayFrame::from_fn(12, 10, |x, _| (x as f64) * (x as f64));
        let p = polynomial_expansion(&quad, 5, 1.1).unwrap();
        for y in 2..8 {
            for x in 2..10 {
                assert!((p.a(x, y)[0][0] - 1.0).abs() < 1e-4);
                assert!((p.b(x, y)[0] - 2.0 * x as f64).abs() < 1e-4);
            }
        }
    }

    #[test]
    fn matches_direct_least_squares_on_texture() {
        let noise = GrayFrame::from_fn(20, 16, |x, y| ((x * 7919 + y * 104729) % 256) as f64);
        let f = gaussian_smooth(&noise, 1.0);
        for (s, sigma) in [(5, 1.1), (7, 1.5), (3, 0.8)] {
            let p = polynomial_expansion(&f, s, sigma).unwrap();
            // includes border pixels: both sides clamp coordinates
            for (x, y) in [(0, 0), (3, 4), (10, 8), (19, 15)] {
                let got = coeff_vec(&p, x, y);
                let want = oracle_fit(&f, x, y, s, sigma);
                for k in 0..6 {
                    assert!((got[k] - want[k]).abs() < 1e-6, "s={s} ({x},{y}) k={k}: {} vs {}", got[k], want[k]);
                }
            }
        }
    }

    #[test]
    fn expansion_needs_room() {
        let f = GrayFrame::filled(4, 4, 0.0);
        assert!(matches!(polynomial_expansion(&f, 5, 1.1), Err(FlowError::TooSmall(_))));
        assert!(matches!(polynomial_expansion(&f, 4, 1.1), Err(FlowError::InvalidParams(_))));
    }

    #[test]
    fn identical_frames_give_zero_flow() {
        let noise = GrayFrame::from_fn(48, 40, |x, y| ((x * 31 + y * 57 + x * y * 3) % 256) as f64);
        let f = gaussian_smooth(&noise, 1.5);
        let flow = farneback_flow(&f, &f, &FarnebackParams::default()).unwrap();
        assert!(flow.max_magnitude() < 1e-3);
    }

    #[test]
    fn rejects_mismatched_frames() {
        let a = GrayFrame::filled(32, 32, 0.0);
        let b = GrayFrame::filled(32, 31, 0.0);
        assert!(matches!(
            farneback_flow(&a, &b, &FarnebackParams::default()),
            Err(FlowError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn params_validation() {
        let mut p = FarnebackParams::default();
        assert!(p.validate().is_ok());
        p.s = 6;
        assert!(p.validate().is_err());
        let p = FarnebackParams { w: 0, ..Default::default() };
        assert!(p.validate().is_err());
    }
}
