use super::pyramid::{build_pyramid, max_levels};
use super::warp::{upscale_flow, warp};
use crate::error::{Error, Result};
use crate::raster::Image;

/// Dense displacement field; `u` horizontal, `v` vertical, in pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    pub u: Image,
    pub v: Image,
}

impl FlowField {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self::constant(width, height, 0.0, 0.0)
    }

    pub fn constant(width: usize, height: usize, u: f64, v: f64) -> Self {
        FlowField {
            u: Image::filled(width, height, 1, u),
            v: Image::filled(width, height, 1, v),
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        self.u.dims()
    }

    pub fn max_magnitude(&self) -> f64 {
        self.u
            .data()
            .iter()
            .zip(self.v.data())
            .map(|(u, v)| u.hypot(*v))
            .fold(0.0, f64::max)
    }

    pub fn add(&self, other: &FlowField) -> FlowField {
        let sum = |a: &Image, b: &Image| {
            let data = a.data().iter().zip(b.data()).map(|(x, y)| x + y).collect();
            Image::new(a.width(), a.height(), 1, data).expect("same dims")
        };
        FlowField {
            u: sum(&self.u, &other.u),
            v: sum(&self.v, &other.v),
        }
    }

    /// Three channels (u, v, 0) so the field fits an RGB float map.
    pub fn to_image(&self) -> Image {
        let zero = Image::zeros(self.u.width(), self.u.height(), 1);
        Image::from_channels(&[self.u.clone(), self.v.clone(), zero]).expect("same dims")
    }

    pub fn from_image(img: &Image) -> Result<FlowField> {
        if img.channels() < 2 {
            return Err(Error::InvalidInput("flow image needs at least two channels".into()));
        }
        Ok(FlowField {
            u: img.channel(0),
            v: img.channel(1),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowParams {
    /// Weight of the squared flow gradient, on values normalized to [0, 1].
    pub smoothness: f64,
    /// SOR sweeps per linearization.
    pub sor_iters: usize,
    pub relaxation: f64,
    /// Internal coarse-to-fine levels (reduced automatically for small frames).
    pub levels: usize,
    /// Re-linearizations per level.
    pub warps: usize,
}

impl Default for FlowParams {
    fn default() -> Self {
        FlowParams {
            smoothness: 0.02,
            sor_iters: 100,
            relaxation: 1.8,
            levels: 3,
            warps: 3,
        }
    }
}

impl FlowParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.smoothness > 0.0) {
            return Err(Error::Config("flow smoothness must be positive".into()));
        }
        if !(self.relaxation > 0.0 && self.relaxation < 2.0) {
            return Err(Error::Config("SOR relaxation must lie in (0, 2)".into()));
        }
        if self.levels == 0 || self.warps == 0 {
            return Err(Error::Config("flow levels and warps must be at least 1".into()));
        }
        Ok(())
    }
}

fn gradient(img: &Image) -> (Vec<f64>, Vec<f64>) {
    let (w, h) = img.dims();
    let mut gx = Vec::with_capacity(w * h);
    let mut gy = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let (xi, yi) = (x as isize, y as isize);
            gx.push(0.5 * (img.get_clamped(xi + 1, yi, 0) - img.get_clamped(xi - 1, yi, 0)));
            gy.push(0.5 * (img.get_clamped(xi, yi + 1, 0) - img.get_clamped(xi, yi - 1, 0)));
        }
    }
    (gx, gy)
}

/// Horn–Schunck system linearized around a current flow:
/// E(u, v) = Σ (Ix·du + Iy·dv + It)² + λ Σ_edges (‖∇u‖² + ‖∇v‖²).
#[derive(Debug, Clone)]
pub(crate) struct LinearizedFlow {
    width: usize,
    height: usize,
    ix: Vec<f64>,
    iy: Vec<f64>,
    it: Vec<f64>,
    u0: Vec<f64>,
    v0: Vec<f64>,
    lambda: f64,
}

impl LinearizedFlow {
    pub(crate) fn new(reference: &Image, target: &Image, flow: &FlowField, lambda: f64) -> Self {
        let (w, h) = reference.dims();
        let (warped, valid) = warp(target, flow);
        let (rx, ry) = gradient(reference);
        let (wx, wy) = gradient(&warped);
        let mut ix = Vec::with_capacity(w * h);
        let mut iy = Vec::with_capacity(w * h);
        let mut it = Vec::with_capacity(w * h);
        for i in 0..w * h {
            if valid.data()[i] {
                ix.push(0.5 * (rx[i] + wx[i]));
                iy.push(0.5 * (ry[i] + wy[i]));
                it.push(warped.data()[i] - reference.data()[i]);
            } else {
                // no data term where the target was sampled off-frame
                ix.push(0.0);
                iy.push(0.0);
                it.push(0.0);
            }
        }
        LinearizedFlow {
            width: w,
            height: h,
            ix,
            iy,
            it,
            u0: flow.u.data().to_vec(),
            v0: flow.v.data().to_vec(),
            lambda,
        }
    }

    #[cfg(test)]
    pub(crate) fn energy(&self, u: &[f64], v: &[f64]) -> f64 {
        let (w, h) = (self.width, self.height);
        let mut e = 0.0;
        for i in 0..w * h {
            let r = self.ix[i] * (u[i] - self.u0[i]) + self.iy[i] * (v[i] - self.v0[i]) + self.it[i];
            e += r * r;
        }
        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                if x + 1 < w {
                    e += self.lambda * ((u[i] - u[i + 1]).powi(2) + (v[i] - v[i + 1]).powi(2));
                }
                if y + 1 < h {
                    e += self.lambda * ((u[i] - u[i + w]).powi(2) + (v[i] - v[i + w]).powi(2));
                }
            }
        }
        e
    }

    /// One red-black SOR sweep. Each pixel update is an over-relaxed exact
    /// minimization along a single coordinate.
    pub(crate) fn sweep(&self, u: &mut [f64], v: &mut [f64], omega: f64) {
        let (w, h) = (self.width, self.height);
        for color in 0..2 {
            for y in 0..h {
                for x in ((y + color) % 2..w).step_by(2) {
                    let i = y * w + x;
                    let mut su = 0.0;
                    let mut sv = 0.0;
                    let mut n = 0.0;
                    for (ok, j) in [
                        (x > 0, i.wrapping_sub(1)),
                        (x + 1 < w, i + 1),
                        (y > 0, i.wrapping_sub(w)),
                        (y + 1 < h, i + w),
                    ] {
                        if ok {
                            su += u[j];
                            sv += v[j];
                            n += 1.0;
                        }
                    }
                    let (ix, iy, it) = (self.ix[i], self.iy[i], self.it[i]);
                    let a = ix * ix + self.lambda * n;
                    if a > 0.0 {
                        let rhs = self.lambda * su + ix * ix * self.u0[i] - ix * (iy * (v[i] - self.v0[i]) + it);
                        u[i] += omega * (rhs / a - u[i]);
                    }
                    let b = iy * iy + self.lambda * n;
                    if b > 0.0 {
                        let rhs = self.lambda * sv + iy * iy * self.v0[i] - iy * (ix * (u[i] - self.u0[i]) + it);
                        v[i] += omega * (rhs / b - v[i]);
                    }
                }
            }
        }
    }

    pub(crate) fn solve(&self, params: &FlowParams) -> FlowField {
        let mut u = self.u0.clone();
        let mut v = self.v0.clone();
        for _ in 0..params.sor_iters {
            self.sweep(&mut u, &mut v, params.relaxation);
        }
        let (w, h) = (self.width, self.height);
        FlowField {
            u: Image::new(w, h, 1, u).expect("dims"),
            v: Image::new(w, h, 1, v).expect("dims"),
        }
    }
}

fn single_channel(img: &Image) -> Image {
    if img.channels() == 1 {
        img.clone()
    } else {
        img.luminance()
    }
}

/// Flow such that `target` sampled at (x + u, y + v) matches `reference`
/// at (x, y). Multichannel inputs are reduced to luminance.
pub fn estimate_flow(reference: &Image, target: &Image, params: &FlowParams) -> Result<FlowField> {
    if reference.dims() != target.dims() {
        return Err(Error::DimensionMismatch(format!(
            "flow between {:?} and {:?}",
            reference.dims(),
            target.dims()
        )));
    }
    params.validate()?;
    let (mut reference, mut target) = (single_channel(reference), single_channel(target));
    let scale = reference.max_value().max(target.max_value());
    if scale > 0.0 && scale.is_finite() {
        reference = reference.map(|v| v / scale);
        target = target.map(|v| v / scale);
    }
    let (w, h) = reference.dims();
    let levels = max_levels(w, h, params.levels);
    let ref_pyr = build_pyramid(&reference, levels)?;
    let tgt_pyr = build_pyramid(&target, levels)?;
    let (cw, ch) = ref_pyr.coarsest().dims();
    let mut flow = FlowField::zeros(cw, ch);
    for l in 0..levels {
        let (lr, lt) = (ref_pyr.level(l), tgt_pyr.level(l));
        if l > 0 {
            flow = upscale_flow(&flow, lr.width(), lr.height());
        }
        for _ in 0..params.warps {
            flow = LinearizedFlow::new(lr, lt, &flow, params.smoothness).solve(params);
        }
    }
    Ok(flow)
}
