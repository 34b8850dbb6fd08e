//! TV-L1 optical flow with the duality-based solver.
//!
//! The energy `Σ |∇u| + λ Σ |I₁(x + u) − I₀(x)|` is decoupled through an
//! auxiliary field `v` with tightness `θ`. Each inner iteration does a
//! pointwise thresholding step on the linearized residual (data term),
//! then a projected step on the dual variables of the total variation
//! (regularizer). Large motions are handled by image warping inside a
//! coarse-to-fine pyramid.

use serde::{Deserialize, Serialize};

use super::{median_filter, FlowError, FlowField};
use crate::raster::{build_pyramid, central_gradient, warp_bilinear, GrayFrame};

/// `|∇I₁|²` below this leaves the auxiliary field untouched.
const GRAD_EPS: f64 = 1e-9;
const MEDIAN_SIZE: usize = 5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TvL1Params {
    /// Data-term weight λ.
    pub lambda: f64,
    /// Tightness θ between `u` and the auxiliary field.
    pub theta: f64,
    /// Dual time step τ.
    pub tau: f64,
    pub warps: usize,
    pub levels: usize,
    pub scale: f64,
    /// Inner loop stops once the RMS flow change drops below this.
    pub epsilon: f64,
    pub max_inner_iterations: usize,
    /// 5×5 median filtering of the flow after every warp.
    pub median_filtering: bool,
    /// Solve on intensities mapped to `[0, 1]` instead of `[0, 255]`.
    pub unit_intensities: bool,
}

impl Default for TvL1Params {
    fn default() -> Self {
        Self {
            lambda: 0.05,
            theta: 0.1,
            tau: 0.15,
            warps: 5,
            levels: 5,
            scale: 0.5,
            epsilon: 0.01,
            max_inner_iterations: 300,
            median_filtering: true,
            unit_intensities: false,
        }
    }
}

impl TvL1Params {
    pub fn validate(&self) -> Result<(), FlowError> {
        let positive = [("lambda", self.lambda), ("theta", self.theta), ("tau", self.tau), ("epsilon", self.epsilon)];
        for (name, value) in positive {
            if !(value > 0.0) {
                return Err(FlowError::InvalidParams(format!("{name} must be positive, got {value}")));
            }
        }
        if self.warps < 1 || self.levels < 1 || self.max_inner_iterations < 1 {
            return Err(FlowError::InvalidParams(
                "warps, levels and max_inner_iterations must be at least 1".into(),
            ));
        }
        if !(self.scale > 0.0 && self.scale < 1.0) {
            return Err(FlowError::InvalidParams(format!("scale must lie in (0, 1), got {}", self.scale)));
        }
        Ok(())
    }

    /// Non-fatal parameter concerns.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.tau > 0.25 {
            out.push(format!("tau = {} exceeds 0.25; the dual iteration may not converge", self.tau));
        }
        out
    }
}

/// Dual variables of the TV term for one flow component.
struct Dual {
    px: Vec<f64>,
    py: Vec<f64>,
}

impl Dual {
    fn zeros(n: usize) -> Self {
        Self { px: vec![0.0; n], py: vec![0.0; n] }
    }

    /// Backward-difference divergence, the negative adjoint of the forward
    /// gradient under Neumann boundary conditions.
    fn divergence(&self, w: usize, h: usize, out: &mut [f64]) {
        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                let dx = if x == 0 {
                    self.px[i]
                } else if x == w - 1 {
                    -self.px[i - 1]
                } else {
                    self.px[i] - self.px[i - 1]
                };
                let dy = if y == 0 {
                    self.py[i]
                } else if y == h - 1 {
                    -self.py[i - w]
                } else {
                    self.py[i] - self.py[i - w]
                };
                out[i] = dx + dy;
            }
        }
    }

    fn step(&mut self, u: &[f64], w: usize, h: usize, tau_over_theta: f64) {
        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                let (gx, gy) = forward_gradient(u, w, h, x, y);
                let norm = 1.0 + tau_over_theta * gx.hypot(gy);
                self.px[i] = (self.px[i] + tau_over_theta * gx) / norm;
                self.py[i] = (self.py[i] + tau_over_theta * gy) / norm;
            }
        }
    }
}

#[inline]
fn forward_gradient(u: &[f64], w: usize, h: usize, x: usize, y: usize) -> (f64, f64) {
    let i = y * w + x;
    let gx = if x + 1 < w { u[i + 1] - u[i] } else { 0.0 };
    let gy = if y + 1 < h { u[i + w] - u[i] } else { 0.0 };
    (gx, gy)
}

/// Solves one pyramid level starting from `init`.
fn solve_level(i0: &GrayFrame, i1: &GrayFrame, init: FlowField, params: &TvL1Params) -> Result<FlowField, FlowError> {
    let (w, h) = i0.dimensions();
    let n = w * h;
    let (gx, gy) = central_gradient(i1)?;
    let (mut u1, mut u2) = init.into_components();
    let mut p1 = Dual::zeros(n);
    let mut p2 = Dual::zeros(n);
    let mut div1 = vec![0.0; n];
    let mut div2 = vec![0.0; n];
    let mut rho_c = vec![0.0; n];
    let mut grad2 = vec![0.0; n];
    let l_t = params.lambda * params.theta;
    let tau_over_theta = params.tau / params.theta;
    let stop = params.epsilon * params.epsilon;

    for _ in 0..params.warps {
        let flow = FlowField::new(w, h, u1.clone(), u2.clone())?;
        let i1w = warp_bilinear(i1, &flow)?;
        let gxw = warp_bilinear(&gx, &flow)?;
        let gyw = warp_bilinear(&gy, &flow)?;
        let (i1w, gxw, gyw) = (i1w.data(), gxw.data(), gyw.data());
        for i in 0..n {
            grad2[i] = gxw[i] * gxw[i] + gyw[i] * gyw[i];
            rho_c[i] = i1w[i] - gxw[i] * u1[i] - gyw[i] * u2[i] - i0.data()[i];
        }

        let mut iteration = 0;
        let mut error = f64::INFINITY;
        while error > stop && iteration < params.max_inner_iterations {
            iteration += 1;
            p1.divergence(w, h, &mut div1);
            p2.divergence(w, h, &mut div2);
            error = 0.0;
            for i in 0..n {
                let rho = rho_c[i] + gxw[i] * u1[i] + gyw[i] * u2[i];
                let (d1, d2) = if rho < -l_t * grad2[i] {
                    (l_t * gxw[i], l_t * gyw[i])
                } else if rho > l_t * grad2[i] {
                    (-l_t * gxw[i], -l_t * gyw[i])
                } else if grad2[i] < GRAD_EPS {
                    (0.0, 0.0)
                } else {
                    let f = -rho / grad2[i];
                    (f * gxw[i], f * gyw[i])
                };
                let v1 = u1[i] + d1;
                let v2 = u2[i] + d2;
                let new1 = v1 + params.theta * div1[i];
                let new2 = v2 + params.theta * div2[i];
                error += (new1 - u1[i]).powi(2) + (new2 - u2[i]).powi(2);
                u1[i] = new1;
                u2[i] = new2;
            }
            error /= n as f64;
            p1.step(&u1, w, h, tau_over_theta);
            p2.step(&u2, w, h, tau_over_theta);
        }

        if params.median_filtering {
            u1 = median_filter(&u1, w, h, MEDIAN_SIZE);
            u2 = median_filter(&u2, w, h, MEDIAN_SIZE);
        }
    }
    FlowField::new(w, h, u1, u2)
}

/// Dense flow from `prev` to `next`, solved on the `[0, 255]` intensity
/// scale unless [`TvL1Params::unit_intensities`] is set.
pub fn tvl1_flow(prev: &GrayFrame, next: &GrayFrame, params: &TvL1Params) -> Result<FlowField, FlowError> {
    params.validate()?;
    if prev.dimensions() != next.dimensions() {
        return Err(FlowError::DimensionMismatch(format!(
            "prev {:?} vs next {:?}",
            prev.dimensions(),
            next.dimensions()
        )));
    }
    let prepare = |f: &GrayFrame| {
        let mut g = f.clone();
        if params.unit_intensities {
            g.data_mut().iter_mut().for_each(|v| *v /= 255.0);
        }
        g
    };
    let p0 = build_pyramid(&prepare(prev), params.levels, params.scale)?;
    let p1 = build_pyramid(&prepare(next), params.levels, params.scale)?;
    let mut flow: Option<FlowField> = None;
    for level in (0..p0.len()).rev() {
        let (w, h) = p0.level(level).dimensions();
        let init = match flow.take() {
            Some(coarse) => coarse.resized(w, h),
            None => FlowField::zeros(w, h),
        };
        flow = Some(solve_level(p0.level(level), p1.level(level), init, params)?);
    }
    Ok(flow.expect("pyramid has at least one level"))
}

/// Value of the TV-L1 objective for a given flow, on the frames' own
/// intensity scale: isotropic total variation of both components
/// (forward differences) plus `lambda` times the L1 warping residual.
pub fn tvl1_energy(prev: &GrayFrame, next: &GrayFrame, flow: &FlowField, lambda: f64) -> Result<f64, FlowError> {
    if prev.dimensions() != next.dimensions() || prev.dimensions() != flow.dimensions() {
        return Err(FlowError::DimensionMismatch(format!(
            "prev {:?}, next {:?}, flow {:?}",
            prev.dimensions(),
            next.dimensions(),
            flow.dimensions()
        )));
    }
    let (w, h) = flow.dimensions();
    let mut tv = 0.0;
    for y in 0..h {
        for x in 0..w {
            let (ux, uy) = forward_gradient(flow.u(), w, h, x, y);
            let (vx, vy) = forward_gradient(flow.v(), w, h, x, y);
            tv += ux.hypot(uy) + vx.hypot(vy);
        }
    }
    let warped = warp_bilinear(next, flow)?;
    let data: f64 = warped.data().iter().zip(prev.data()).map(|(a, b)| (a - b).abs()).sum();
    Ok(tv + lambda * data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::gaussian_smooth;

    fn texture(w: usize, h: usize) -> GrayFrame {
        let noise = GrayFrame::from_fn(w, h, |x, y| ((x * 7919 + y * 104729 + x * y * 13) % 256) as f64);
        gaussian_smooth(&noise, 1.5).rescaled(0.0, 255.0)
    }

    #[test]
    fn divergence_is_negative_adjoint_of_gradient() {
        let (w, h) = (7, 5);
        let u: Vec<f64> = (0..w * h).map(|i| ((i * 37) % 11) as f64 - 5.0).collect();
        let p = Dual {
            px: (0..w * h).map(|i| ((i * 13) % 7) as f64 - 3.0).collect(),
            py: (0..w * h).map(|i| ((i * 29) % 5) as f64 - 2.0).collect(),
        };
        let mut div = vec![0.0; w * h];
        p.divergence(w, h, &mut div);
        let mut lhs = 0.0;
        for y in 0..h {
            for x in 0..w {
                let (gx, gy) = forward_gradient(&u, w, h, x, y);
                let i = y * w + x;
                lhs += gx * p.px[i] + gy * p.py[i];
            }
        }
        let rhs: f64 = -u.iter().zip(&div).map(|(a, b)| a * b).sum::<f64>();
        assert!((lhs - rhs).abs() < 1e-9, "{lhs} vs {rhs}");
    }

    #[test]
    fn identical_frames_give_zero_flow() {
        let f = texture(48, 40);
        let flow = tvl1_flow(&f, &f, &TvL1Params::default()).unwrap();
        assert!(flow.max_magnitude() < 1e-2);
    }

    #[test]
    fn energy_formula() {
        let prev = texture(20, 16);
        assert_eq!(tvl1_energy(&prev, &prev, &FlowField::zeros(20, 16), 0.3).unwrap(), 0.0);
        let next = GrayFrame::from_fn(20, 16, |x, y| prev.get(x, y) + ((x + y) % 3) as f64);
        let s: f64 = next.data().iter().zip(prev.data()).map(|(a, b)| (a - b).abs()).sum();
        let e = tvl1_energy(&prev, &next, &FlowField::zeros(20, 16), 0.3).unwrap();
        assert_eq!(e, 0.3 * s);
    }

    #[test]
    fn constant_flow_has_no_tv_cost() {
        let prev = texture(20, 16);
        let next = texture(20, 16).flip_horizontal();
        let flow = FlowField::constant(20, 16, 1.0, 0.0);
        // direct evaluation of both terms
        let mut residual = 0.0;
        for y in 0..16 {
            for x in 0..20 {
                let shifted = next.get((x + 1).min(19), y);
                residual += (shifted - prev.get(x, y)).abs();
            }
        }
        let e = tvl1_energy(&prev, &next, &flow, 0.05).unwrap();
        assert!((e - 0.05 * residual).abs() < 1e-9);
    }

    #[test]
    fn tau_warning() {
        assert!(TvL1Params::default().warnings().is_empty());
        let p = TvL1Params { tau: 0.3, ..Default::default() };
        assert_eq!(p.warnings().len(), 1);
        assert!(p.validate().is_ok());
        let p = TvL1Params { lambda: 0.0, ..Default::default() };
        assert!(p.validate().is_err());
    }
}
