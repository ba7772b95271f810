//! Alternating-exposure test sequences with known radiance.

use crate::error::{Error, Result};
use crate::imaging::{LdrFrame, ResponseCurve};
use crate::raster::{Image, Mask};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Textured rectangle moving at constant velocity.
#[derive(Debug, Clone, PartialEq)]
pub struct MovingRect {
    /// Top-left corner in frame 0.
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub height: f64,
    /// Pixels per frame.
    pub vx: f64,
    pub vy: f64,
    /// Mean radiance per channel.
    pub radiance: [f64; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    pub frames: usize,
    pub channels: usize,
    /// Exposure of even frames, then odd frames, in seconds.
    pub exposures: [f64; 2],
    /// Mean radiance of the textured lower part of the background.
    pub dark_radiance: f64,
    /// Radiance at the top and bottom of the sky gradient.
    pub bright_radiance: [f64; 2],
    /// Fraction of the height taken by the sky gradient.
    pub sky_fraction: f64,
    pub objects: Vec<MovingRect>,
    /// Gaussian noise added to the real-valued codes before quantization.
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SceneSpec {
    /// A small bright square crossing a dark textured floor below a sky that
    /// saturates the long exposure.
    fn default() -> Self {
        SceneSpec {
            width: 160,
            height: 120,
            frames: 9,
            channels: 3,
            exposures: [0.005, 0.0005],
            dark_radiance: 12.0,
            bright_radiance: [1400.0, 300.0],
            sky_fraction: 0.35,
            objects: vec![MovingRect {
                x: 14.0,
                y: 70.0,
                width: 12.0,
                height: 12.0,
                vx: 14.0,
                vy: 1.0,
                radiance: [140.0, 115.0, 95.0],
            }],
            noise_sigma: 0.5,
            seed: 7,
        }
    }
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 || self.frames == 0 {
            return Err(Error::InvalidInput("scene needs positive size and frame count".into()));
        }
        if self.channels != 1 && self.channels != 3 {
            return Err(Error::InvalidInput("scene channels must be 1 or 3".into()));
        }
        if !(self.exposures[0] > 0.0 && self.exposures[1] > 0.0) {
            return Err(Error::InvalidInput("exposures must be positive".into()));
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(Error::InvalidInput("noise sigma must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn exposure(&self, frame: usize) -> f64 {
        self.exposures[frame % 2]
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticSequence {
    pub frames: Vec<LdrFrame>,
    /// Ground-truth radiance per frame.
    pub truth: Vec<Image>,
    /// Pixels covered by a moving object, per frame.
    pub object_masks: Vec<Mask>,
}

const TINT: [f64; 3] = [1.0, 0.93, 0.85];

fn background(spec: &SceneSpec, x: usize, y: usize) -> f64 {
    let (xf, yf) = (x as f64, y as f64);
    let horizon = spec.sky_fraction * spec.height as f64;
    if yf < horizon {
        let t = yf / horizon.max(1.0);
        let base = spec.bright_radiance[0] * (1.0 - t) + spec.bright_radiance[1] * t;
        base * (1.0 + 0.08 * (0.13 * xf).sin())
    } else {
        let tex = 0.35 * (0.31 * xf).sin() * (0.23 * yf).cos() + 0.15 * (0.07 * xf + 0.11 * yf).sin();
        spec.dark_radiance * (1.0 + tex)
    }
}

fn object_texture(u: f64, v: f64) -> f64 {
    1.0 + 0.12 * (0.9 * u).sin() * (0.7 * v).cos()
}

/// Scene radiance and object coverage of one frame.
pub fn render_truth(spec: &SceneSpec, frame: usize) -> (Image, Mask) {
    let (w, h, ch) = (spec.width, spec.height, spec.channels);
    let mut img = Image::zeros(w, h, ch);
    let mut mask = Mask::filled(w, h, false);
    for y in 0..h {
        for x in 0..w {
            let b = background(spec, x, y);
            for c in 0..ch {
                img.set(x, y, c, b * if ch == 1 { 1.0 } else { TINT[c] });
            }
        }
    }
    for obj in &spec.objects {
        let ox = obj.x + obj.vx * frame as f64;
        let oy = obj.y + obj.vy * frame as f64;
        for y in 0..h {
            for x in 0..w {
                let (cx, cy) = (x as f64 + 0.5, y as f64 + 0.5);
                if cx >= ox && cx < ox + obj.width && cy >= oy && cy < oy + obj.height {
                    let t = object_texture(cx - ox, cy - oy);
                    mask.set(x, y, true);
                    for c in 0..ch {
                        let r = if ch == 1 {
                            crate::raster::luminance_of(&obj.radiance)
                        } else {
                            obj.radiance[c]
                        };
                        img.set(x, y, c, r * t);
                    }
                }
            }
        }
    }
    (img, mask)
}

/// Renders every frame, exposes it through `crf` with alternating exposure
/// times and quantizes it. Deterministic for a given seed.
pub fn generate_synthetic(spec: &SceneSpec, crf: &ResponseCurve) -> Result<SyntheticSequence> {
    spec.validate()?;
    if crf.channels() != 1 && crf.channels() != spec.channels {
        return Err(Error::DimensionMismatch(format!(
            "{}-channel curve for a {}-channel scene",
            crf.channels(),
            spec.channels
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.noise_sigma.max(f64::MIN_POSITIVE)).expect("valid sigma");
    let z_max = crf.z_max() as f64;
    let mut out = SyntheticSequence {
        frames: Vec::with_capacity(spec.frames),
        truth: Vec::with_capacity(spec.frames),
        object_masks: Vec::with_capacity(spec.frames),
    };
    for k in 0..spec.frames {
        let (truth, mask) = render_truth(spec, k);
        let dt = spec.exposure(k);
        let ch = spec.channels;
        let codes = truth
            .data()
            .iter()
            .enumerate()
            .map(|(i, &a)| {
                let c = if crf.channels() == 1 { 0 } else { i % ch };
                let mut z = crf.code_for(c, (a * dt).ln());
                if spec.noise_sigma > 0.0 {
                    z += noise.sample(&mut rng);
                }
                z.round().clamp(0.0, z_max) as u16
            })
            .collect();
        out.frames.push(LdrFrame::new(spec.width, spec.height, ch, codes, dt)?);
        out.truth.push(truth);
        out.object_masks.push(mask);
    }
    Ok(out)
}
